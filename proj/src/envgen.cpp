#include "linqrl/envgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "linqrl/errors.hpp"
#include "linqrl/rng.hpp"

namespace linqrl {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Redraws of a single state's action set before falling back to ties.
constexpr int kStateRetries = 64;
// Keeps constructed deficits clear of gap_min after the DP recomputation.
constexpr double kGapMargin = 1e-12;

struct Draw {
  std::vector<double> transition;
  std::vector<double> reward;
  std::vector<double> phi;
};

std::vector<double> dirichlet_one(Rng& rng, int n) {
  std::vector<double> x(n);
  double total = 0.0;
  for (auto& v : x) {
    v = -std::log1p(-rng.uniform());
    total += v;
  }
  if (total <= 0.0) {
    std::fill(x.begin(), x.end(), 1.0 / n);
    return x;
  }
  for (auto& v : x) v /= total;
  return x;
}

void normalize_row(std::span<double> row) {
  const double total = std::accumulate(row.begin(), row.end(), 0.0);
  for (auto& p : row) p /= total;
}

// Every action is either tied with the best (exactly) or at least gap_min
// below it.
bool state_gap_ok(const std::vector<double>& q, double gap_min) {
  const double best = *std::max_element(q.begin(), q.end());
  return std::all_of(q.begin(), q.end(), [&](double v) {
    const double deficit = best - v;
    return deficit == 0.0 || deficit >= gap_min + kGapMargin;
  });
}

Draw draw_linear_mdp(const EnvSpec& spec, Rng& rng) {
  const int H = spec.horizon, S = spec.num_states, A = spec.num_actions, d = spec.dim;
  Draw out;
  out.transition.assign(static_cast<std::size_t>(H) * S * A * S, 0.0);
  out.reward.assign(static_cast<std::size_t>(H) * S * A, 0.0);
  out.phi.assign(static_cast<std::size_t>(H) * S * A * d, 0.0);

  std::vector<double> v_next(S, 0.0);
  std::vector<double> v_here(S, 0.0);
  for (int h = H; h >= 1; --h) {
    std::vector<double> w(d);
    for (auto& x : w) x = rng.uniform();
    std::vector<std::vector<double>> mu(d);
    for (auto& row : mu) row = dirichlet_one(rng, S);
    std::vector<double> theta(d);
    for (int i = 0; i < d; ++i) {
      theta[i] = w[i] + std::inner_product(mu[i].begin(), mu[i].end(), v_next.begin(), 0.0);
    }

    // d distinct anchor cells carry the standard basis vectors.
    std::vector<int> cells(S * A);
    std::iota(cells.begin(), cells.end(), 0);
    std::vector<int> anchor_of(S * A, -1);
    for (int i = 0; i < d; ++i) {
      const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(S * A - i)));
      std::swap(cells[i], cells[j]);
      anchor_of[cells[i]] = i;
    }

    for (State s = 0; s < S; ++s) {
      std::vector<std::vector<double>> feats(A, std::vector<double>(d, 0.0));
      std::vector<double> q(A);
      auto fill = [&] {
        for (Action a = 0; a < A; ++a) {
          const int anchor = anchor_of[s * A + a];
          if (anchor >= 0) {
            std::fill(feats[a].begin(), feats[a].end(), 0.0);
            feats[a][anchor] = 1.0;
          } else {
            feats[a] = dirichlet_one(rng, d);
          }
          q[a] = std::inner_product(feats[a].begin(), feats[a].end(), theta.begin(), 0.0);
        }
      };
      bool ok = false;
      for (int attempt = 0; attempt < kStateRetries && !ok; ++attempt) {
        fill();
        ok = state_gap_ok(q, spec.gap_min);
      }
      if (!ok) {
        // Tie the offending free actions to the best one; anchored conflicts
        // are left for the environment-level check to reject.
        const auto best = static_cast<Action>(std::max_element(q.begin(), q.end()) - q.begin());
        for (Action a = 0; a < A; ++a) {
          const double deficit = q[best] - q[a];
          if (anchor_of[s * A + a] < 0 && deficit > 0.0 && deficit < spec.gap_min + kGapMargin) {
            feats[a] = feats[best];
            q[a] = q[best];
          }
        }
      }
      v_here[s] = *std::max_element(q.begin(), q.end());

      for (Action a = 0; a < A; ++a) {
        const std::size_t cell = (static_cast<std::size_t>(h - 1) * S + s) * A + a;
        std::copy(feats[a].begin(), feats[a].end(), out.phi.begin() + cell * d);
        const double r = std::inner_product(feats[a].begin(), feats[a].end(), w.begin(), 0.0);
        out.reward[cell] = std::clamp(r, 0.0, 1.0);
        std::span<double> row(out.transition.data() + cell * S, S);
        for (int i = 0; i < d; ++i) {
          if (feats[a][i] == 0.0) continue;
          for (State t = 0; t < S; ++t) row[t] += feats[a][i] * mu[i][t];
        }
        normalize_row(row);
      }
    }
    std::swap(v_next, v_here);
  }
  return out;
}

Draw draw_tabular(const EnvSpec& spec, Rng& rng) {
  const int H = spec.horizon, S = spec.num_states, A = spec.num_actions;
  const int d = S * A;
  Draw out;
  out.transition.assign(static_cast<std::size_t>(H) * S * A * S, 0.0);
  out.reward.assign(static_cast<std::size_t>(H) * S * A, 0.0);
  out.phi.assign(static_cast<std::size_t>(H) * S * A * d, 0.0);

  std::vector<double> v_next(S, 0.0);
  std::vector<double> v_here(S, 0.0);
  for (int h = H; h >= 1; --h) {
    for (State s = 0; s < S; ++s) {
      std::vector<double> r(A);
      std::vector<std::vector<double>> rows(A);
      std::vector<double> q(A);
      bool ok = false;
      for (int attempt = 0; attempt < kStateRetries && !ok; ++attempt) {
        for (Action a = 0; a < A; ++a) {
          r[a] = rng.uniform();
          rows[a] = dirichlet_one(rng, S);
          q[a] = r[a] + std::inner_product(rows[a].begin(), rows[a].end(), v_next.begin(), 0.0);
        }
        ok = state_gap_ok(q, spec.gap_min);
      }
      v_here[s] = *std::max_element(q.begin(), q.end());
      for (Action a = 0; a < A; ++a) {
        const std::size_t cell = (static_cast<std::size_t>(h - 1) * S + s) * A + a;
        out.reward[cell] = r[a];
        std::copy(rows[a].begin(), rows[a].end(), out.transition.begin() + cell * S);
        normalize_row({out.transition.data() + cell * S, static_cast<std::size_t>(S)});
        out.phi[cell * d + s * A + a] = 1.0;
      }
    }
    std::swap(v_next, v_here);
  }
  return out;
}

Draw draw_chain(const EnvSpec& spec, Rng& rng) {
  const int H = spec.horizon, S = spec.num_states, A = spec.num_actions;
  constexpr int d = 2;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Draw out;
  out.transition.assign(static_cast<std::size_t>(H) * S * A * S, 0.0);
  out.reward.assign(static_cast<std::size_t>(H) * S * A, 0.0);
  out.phi.assign(static_cast<std::size_t>(H) * S * A * d, 0.0);

  std::vector<int> rank(A);
  for (int h = 1; h <= H; ++h) {
    for (State s = 0; s < S; ++s) {
      std::iota(rank.begin(), rank.end(), 0);
      for (int i = A - 1; i > 0; --i) {
        std::swap(rank[i], rank[rng.below(static_cast<std::uint64_t>(i + 1))]);
      }
      for (Action a = 0; a < A; ++a) {
        const std::size_t cell = (static_cast<std::size_t>(h - 1) * S + s) * A + a;
        const double r = static_cast<double>(rank[a]) / A;
        out.reward[cell] = r;
        out.transition[cell * S + (s + a + 1) % S] = 1.0;
        out.phi[cell * d] = r * inv_sqrt2;
        out.phi[cell * d + 1] = inv_sqrt2;
      }
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kLinearMdp:
      return "linear_mdp";
    case EnvKind::kTabularOneHot:
      return "tabular_onehot";
    case EnvKind::kDeterministicChain:
      return "deterministic_chain";
  }
  return "unknown";
}

EnvKind parse_env_kind(std::string_view name) {
  if (name == "linear_mdp") return EnvKind::kLinearMdp;
  if (name == "tabular_onehot") return EnvKind::kTabularOneHot;
  if (name == "deterministic_chain") return EnvKind::kDeterministicChain;
  throw UsageError("unknown environment kind '" + std::string(name) + "'");
}

void validate_spec(const EnvSpec& spec) {
  if (spec.horizon <= 0 || spec.num_states <= 0 || spec.num_actions <= 0 || spec.dim <= 0) {
    throw UsageError("env spec: H, S, A and d must be positive");
  }
  if (!(spec.gap_min > 0.0)) throw UsageError("env spec: gap_min must be positive");
  if (spec.max_rejections < 0) throw UsageError("env spec: max_rejections must be nonnegative");
  const int cells = spec.num_states * spec.num_actions;
  switch (spec.kind) {
    case EnvKind::kLinearMdp:
      if (spec.dim > cells) throw UsageError("env spec: linear_mdp requires d <= S*A");
      break;
    case EnvKind::kTabularOneHot:
      if (spec.dim != cells) throw UsageError("env spec: tabular_onehot requires d = S*A");
      break;
    case EnvKind::kDeterministicChain:
      if (spec.dim != 2) throw UsageError("env spec: deterministic_chain requires d = 2");
      break;
  }
}

EnvSpec parse_env_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("env spec: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("env spec: expected a JSON object");
  auto need = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw ParseError(std::string("env spec: missing field '") + key + "'");
    return j.at(key);
  };
  try {
    EnvSpec spec;
    spec.kind = parse_env_kind(need("kind").get<std::string>());
    spec.horizon = need("H").get<int>();
    spec.num_states = need("S").get<int>();
    spec.num_actions = need("A").get<int>();
    if (j.contains("d")) {
      spec.dim = j.at("d").get<int>();
    } else if (spec.kind == EnvKind::kTabularOneHot) {
      spec.dim = spec.num_states * spec.num_actions;
    } else if (spec.kind == EnvKind::kDeterministicChain) {
      spec.dim = 2;
    } else {
      throw ParseError("env spec: missing field 'd'");
    }
    spec.gap_min = need("gap_min").get<double>();
    spec.seed = need("seed").get<std::uint64_t>();
    if (j.contains("max_rejections")) spec.max_rejections = j.at("max_rejections").get<int>();
    validate_spec(spec);
    return spec;
  } catch (const json::exception& e) {
    throw ParseError(std::string("env spec: ") + e.what());
  }
}

Environment::Environment(EnvKind kind, std::uint64_t seed, FiniteMdp mdp, FeatureMap features)
    : kind_(kind), seed_(seed), mdp_(std::move(mdp)), features_(std::move(features)) {
  if (features_.horizon() != mdp_.horizon() || features_.num_states() != mdp_.num_states() ||
      features_.num_actions() != mdp_.num_actions()) {
    throw ValidationError("environment: feature map shape does not match the MDP");
  }
  dp_ = dp_solve(mdp_);
  fit_ = fit_linear_q(mdp_, features_, dp_);
  if (!(fit_.max_residual <= kMaxFitResidual)) {
    std::ostringstream os;
    os << "environment: Q* is not linearly realizable (fit residual " << fit_.max_residual << ")";
    throw ValidationError(os.str());
  }
  const double theta_bound = 2.0 * mdp_.horizon() * std::sqrt(static_cast<double>(features_.dim()));
  for (std::size_t h = 0; h < fit_.theta_norms.size(); ++h) {
    if (fit_.theta_norms[h] > theta_bound) {
      std::ostringstream os;
      os << "environment: |theta_" << h + 1 << "| = " << fit_.theta_norms[h] << " exceeds 2H*sqrt(d) = "
         << theta_bound;
      throw ValidationError(os.str());
    }
  }
  if (!(dp_.gap_global > 0.0)) throw ValidationError("environment: sub-optimality gap is not positive");
}

Environment generate(const EnvSpec& spec) {
  validate_spec(spec);
  double best_gap = -kInf;
  for (int attempt = 0; attempt <= spec.max_rejections; ++attempt) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(attempt)));
    Draw draw;
    switch (spec.kind) {
      case EnvKind::kLinearMdp:
        draw = draw_linear_mdp(spec, rng);
        break;
      case EnvKind::kTabularOneHot:
        draw = draw_tabular(spec, rng);
        break;
      case EnvKind::kDeterministicChain:
        draw = draw_chain(spec, rng);
        break;
    }
    FiniteMdp mdp(spec.horizon, spec.num_states, spec.num_actions, std::move(draw.transition),
                  std::move(draw.reward));
    FeatureMap features(spec.horizon, spec.num_states, spec.num_actions, spec.dim, draw.phi);
    const double gap = dp_solve(mdp).gap_global;
    if (std::isfinite(gap)) best_gap = std::max(best_gap, gap);
    if (!(gap >= spec.gap_min)) continue;
    try {
      return Environment(spec.kind, spec.seed, std::move(mdp), std::move(features));
    } catch (const ValidationError&) {
      continue;
    }
  }
  std::ostringstream os;
  os << "generation failed: no draw reached gap_min " << spec.gap_min << " after "
     << spec.max_rejections + 1 << " attempts (best gap " << best_gap << ")";
  throw GenerationError(os.str(), best_gap);
}

namespace {

json nested(std::span<const double> flat, std::span<const int> dims) {
  if (dims.size() == 1) return json(std::vector<double>(flat.begin(), flat.begin() + dims[0]));
  json out = json::array();
  std::size_t stride = 1;
  for (std::size_t i = 1; i < dims.size(); ++i) stride *= static_cast<std::size_t>(dims[i]);
  for (int i = 0; i < dims[0]; ++i) out.push_back(nested(flat.subspan(i * stride, stride), dims.subspan(1)));
  return out;
}

void flatten_into(const json& node, std::span<const int> dims, const std::string& path,
                  std::vector<double>& out) {
  if (!node.is_array() || node.size() != static_cast<std::size_t>(dims[0])) {
    throw ParseError(path + ": expected an array of length " + std::to_string(dims[0]));
  }
  for (int i = 0; i < dims[0]; ++i) {
    const std::string child = path + "[" + std::to_string(i) + "]";
    if (dims.size() == 1) {
      if (!node[i].is_number()) throw ParseError(child + ": expected a number");
      out.push_back(node[i].get<double>());
    } else {
      flatten_into(node[i], dims.subspan(1), child, out);
    }
  }
}

template <typename T>
T meta_field(const json& meta, const char* key) {
  if (!meta.contains(key)) throw ParseError(std::string("meta.") + key + ": missing");
  try {
    return meta.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("meta.") + key + ": wrong type");
  }
}

}  // namespace

std::string environment_to_json(const Environment& env) {
  const int H = env.horizon(), S = env.num_states(), A = env.num_actions(), d = env.dim();
  json meta;
  meta["kind"] = std::string(to_string(env.kind()));
  meta["H"] = H;
  meta["S"] = S;
  meta["A"] = A;
  meta["d"] = d;
  meta["seed"] = env.seed();
  if (std::isfinite(env.certified_gap())) {
    meta["gap"] = env.certified_gap();
  } else {
    meta["gap"] = nullptr;
  }
  json doc;
  doc["meta"] = std::move(meta);
  const int tdims[] = {H, S, A, S};
  const int rdims[] = {H, S, A};
  const int pdims[] = {H, S, A, d};
  doc["transition"] = nested(env.mdp().transition_data(), tdims);
  doc["reward"] = nested(env.mdp().reward_data(), rdims);
  const auto phi = env.features().flatten();
  doc["phi"] = nested(phi, pdims);
  return doc.dump() + "\n";
}

Environment environment_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("environment file: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("environment file: expected a JSON object");
  for (const char* key : {"meta", "transition", "reward", "phi"}) {
    if (!doc.contains(key)) throw ParseError(std::string(key) + ": missing");
  }
  const json& meta = doc.at("meta");
  if (!meta.is_object()) throw ParseError("meta: expected an object");
  EnvKind kind;
  try {
    kind = parse_env_kind(meta_field<std::string>(meta, "kind"));
  } catch (const UsageError& e) {
    throw ParseError(std::string("meta.kind: ") + e.what());
  }
  const int H = meta_field<int>(meta, "H");
  const int S = meta_field<int>(meta, "S");
  const int A = meta_field<int>(meta, "A");
  const int d = meta_field<int>(meta, "d");
  const auto seed = meta_field<std::uint64_t>(meta, "seed");
  if (H <= 0 || S <= 0 || A <= 0 || d <= 0) throw ParseError("meta: H, S, A, d must be positive");

  std::vector<double> transition, reward, phi;
  const int tdims[] = {H, S, A, S};
  const int rdims[] = {H, S, A};
  const int pdims[] = {H, S, A, d};
  flatten_into(doc.at("transition"), tdims, "transition", transition);
  flatten_into(doc.at("reward"), rdims, "reward", reward);
  flatten_into(doc.at("phi"), pdims, "phi", phi);

  Environment env(kind, seed, FiniteMdp(H, S, A, std::move(transition), std::move(reward)),
                  FeatureMap(H, S, A, d, phi));
  if (!meta.contains("gap")) throw ParseError("meta.gap: missing");
  const json& gap = meta.at("gap");
  if (gap.is_null()) {
    if (std::isfinite(env.certified_gap())) throw ValidationError("meta.gap is null but the certified gap is finite");
  } else if (gap.is_number()) {
    const double stated = gap.get<double>();
    if (!(std::abs(stated - env.certified_gap()) <= 1e-12 * std::max(1.0, std::abs(stated)))) {
      std::ostringstream os;
      os.precision(17);
      os << "meta.gap = " << stated << " does not match the certified gap " << env.certified_gap();
      throw ValidationError(os.str());
    }
  } else {
    throw ParseError("meta.gap: expected a number or null");
  }
  return env;
}

void save_environment(const Environment& env, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot open '" + path.string() + "' for writing");
  out << environment_to_json(env);
  if (!out) throw UsageError("failed writing '" + path.string() + "'");
}

Environment load_environment(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return environment_from_json(buffer.str());
}

}  // namespace linqrl
