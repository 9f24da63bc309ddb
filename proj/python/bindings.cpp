#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>

#include "linqrl/agent.hpp"
#include "linqrl/envgen.hpp"
#include "linqrl/errors.hpp"
#include "linqrl/harness.hpp"
#include "linqrl/mdp.hpp"

namespace py = pybind11;
using namespace linqrl;

namespace {

py::array_t<double> to_array(const std::vector<double>& data, std::vector<py::ssize_t> shape) {
  py::array_t<double> out(shape);
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

Environment generate_env(const std::string& kind, int horizon, int num_states, int num_actions,
                         std::optional<int> dim, double gap_min, std::uint64_t seed, int max_rejections) {
  EnvSpec spec;
  spec.kind = parse_env_kind(kind);
  spec.horizon = horizon;
  spec.num_states = num_states;
  spec.num_actions = num_actions;
  if (dim) {
    spec.dim = *dim;
  } else if (spec.kind == EnvKind::kTabularOneHot) {
    spec.dim = num_states * num_actions;
  } else if (spec.kind == EnvKind::kDeterministicChain) {
    spec.dim = 2;
  } else {
    throw UsageError("linear_mdp requires d");
  }
  spec.gap_min = gap_min;
  spec.seed = seed;
  spec.max_rejections = max_rejections;
  return generate(spec);
}

py::dict solve(const Environment& env) {
  const DpSolution& dp = env.dp();
  const py::ssize_t H = dp.horizon, S = dp.num_states, A = dp.num_actions;
  std::vector<double> v(static_cast<std::size_t>(H * S));
  std::vector<double> gaps(static_cast<std::size_t>(H * S));
  std::vector<int> greedy(static_cast<std::size_t>(H * S));
  for (int h = 1; h <= H; ++h) {
    for (State s = 0; s < S; ++s) {
      const auto i = static_cast<std::size_t>((h - 1) * S + s);
      v[i] = dp.v_star.at(h, s);
      gaps[i] = dp.gap(h, s);
      greedy[i] = dp.greedy_policy.action(h, s);
    }
  }
  py::array_t<int> policy({H, S});
  std::copy(greedy.begin(), greedy.end(), policy.mutable_data());
  py::dict out;
  out["q_star"] = to_array(dp.q_star, {H, S, A});
  out["v_star"] = to_array(v, {H, S});
  out["gap"] = to_array(gaps, {H, S});
  out["gap_global"] = dp.gap_global;
  out["greedy_policy"] = policy;
  return out;
}

RegretLog run(const Environment& env, const std::string& agent, std::int64_t episodes, double delta, double c_beta,
              std::optional<double> gap_override, std::uint64_t seed, const std::string& monitors,
              const std::string& initial_state, bool record_series) {
  ExperimentConfig config;
  config.agent = parse_agent_kind(agent);
  config.episodes = episodes;
  config.delta = delta;
  config.c_beta = c_beta;
  config.gap_override = gap_override;
  config.seed = seed;
  config.monitors = parse_monitor_flags(monitors);
  config.initial_state = parse_initial_state_mode(initial_state);
  config.record_series = record_series;
  py::gil_scoped_release release;
  return run_experiment(env, config);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Linear Q-learning with state revisiting: environments, exact oracle and experiment harness.";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<NumericalIntegrityError>(m, "NumericalIntegrityError", PyExc_ArithmeticError);
  // Instances carry the best observed gap as `best_gap`.
  static PyObject* generation_error =
      PyErr_NewException("linqrl._core.GenerationError", PyExc_RuntimeError, nullptr);
  m.add_object("GenerationError", py::handle(generation_error));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const GenerationError& e) {
      py::object err = py::reinterpret_borrow<py::object>(generation_error)(e.what());
      err.attr("best_gap") = e.best_gap();
      PyErr_SetObject(generation_error, err.ptr());
    }
  });

  py::class_<Environment>(m, "Environment")
      .def_property_readonly("kind", [](const Environment& e) { return std::string(to_string(e.kind())); })
      .def_property_readonly("seed", &Environment::seed)
      .def_property_readonly("horizon", &Environment::horizon)
      .def_property_readonly("num_states", &Environment::num_states)
      .def_property_readonly("num_actions", &Environment::num_actions)
      .def_property_readonly("dim", &Environment::dim)
      .def_property_readonly("certified_gap", &Environment::certified_gap)
      .def_property_readonly("fit_residual", [](const Environment& e) { return e.fit().max_residual; })
      .def_property_readonly("theta_norms", [](const Environment& e) { return e.fit().theta_norms; })
      .def_property_readonly("reward", [](const Environment& e) {
        return to_array(e.mdp().reward_data(), {e.horizon(), e.num_states(), e.num_actions()});
      })
      .def_property_readonly("transition", [](const Environment& e) {
        return to_array(e.mdp().transition_data(), {e.horizon(), e.num_states(), e.num_actions(), e.num_states()});
      })
      .def_property_readonly("phi", [](const Environment& e) {
        return to_array(e.features().flatten(), {e.horizon(), e.num_states(), e.num_actions(), e.dim()});
      })
      .def("to_json", &environment_to_json)
      .def("__repr__", [](const Environment& e) {
        return "<Environment " + std::string(to_string(e.kind())) + " H=" + std::to_string(e.horizon()) +
               " S=" + std::to_string(e.num_states()) + " A=" + std::to_string(e.num_actions()) +
               " d=" + std::to_string(e.dim()) + ">";
      });

  m.def("generate", &generate_env, py::arg("kind"), py::arg("H"), py::arg("S"), py::arg("A"),
        py::arg("d") = py::none(), py::arg("gap_min") = 0.05, py::arg("seed") = 0, py::arg("max_rejections") = 200,
        "Draw a certified environment; raises GenerationError when no draw reaches gap_min.");
  m.def("from_json", &environment_from_json, py::arg("text"));
  m.def("save", &save_environment, py::arg("env"), py::arg("path"));
  m.def("load", &load_environment, py::arg("path"));
  m.def("dp_solve", &solve, py::arg("env"),
        "Exact Q*, V*, per-state gaps, global gap and greedy policy as numpy arrays.");
  m.def("compute_beta", &compute_beta, py::arg("d"), py::arg("H"), py::arg("k_budget"), py::arg("delta"),
        py::arg("c_beta"));
  m.def("revisit_bound", &revisit_bound, py::arg("d"), py::arg("H"), py::arg("num_paths"), py::arg("delta"),
        py::arg("c_beta"), py::arg("gap"));

  py::class_<RegretLog>(m, "RegretLog")
      .def_property_readonly("agent", [](const RegretLog& l) { return std::string(to_string(l.agent)); })
      .def_readonly("episodes", &RegretLog::episodes)
      .def_readonly("paths", &RegretLog::paths)
      .def_readonly("samples", &RegretLog::samples)
      .def_property_readonly("revisits", &RegretLog::revisits)
      .def_readonly("beta", &RegretLog::beta)
      .def_readonly("gap_input", &RegretLog::gap_input)
      .def_readonly("total_episode_regret", &RegretLog::total_episode_regret)
      .def_readonly("total_path_regret", &RegretLog::total_path_regret)
      .def_readonly("episode_regret", &RegretLog::episode_regret)
      .def_readonly("index_set_sizes", &RegretLog::index_set_sizes)
      .def_property_readonly("average_episode_regret", &RegretLog::average_episode_regret)
      .def("deterministic_monitors_pass", &RegretLog::deterministic_monitors_pass)
      .def("summary_json", [](const RegretLog& l) { return summary_json(l); })
      .def("series_csv", [](const RegretLog& l) { return series_csv(l); });

  m.def("run_experiment", &run, py::arg("env"), py::arg("agent") = "linq", py::arg("episodes") = 1,
        py::arg("delta") = 0.1, py::arg("c_beta") = 8.0, py::arg("gap_override") = py::none(), py::arg("seed") = 0,
        py::arg("monitors") = "default", py::arg("initial_state") = "fixed", py::arg("record_series") = false);
}
