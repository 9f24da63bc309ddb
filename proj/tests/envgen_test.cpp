#include "linqrl/envgen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "linqrl/errors.hpp"
#include "test_fixtures.hpp"

namespace linqrl {
namespace {

EnvSpec spec_of(EnvKind kind, int H, int S, int A, int d, double gap_min, std::uint64_t seed) {
  EnvSpec spec;
  spec.kind = kind;
  spec.horizon = H;
  spec.num_states = S;
  spec.num_actions = A;
  spec.dim = d;
  spec.gap_min = gap_min;
  spec.seed = seed;
  return spec;
}

TEST(Environment, HandOneHotCertifiesGap) {
  Environment env(EnvKind::kTabularOneHot, 0, testing_fixtures::hand_mdp(), testing_fixtures::one_hot(2, 2, 2));
  EXPECT_NEAR(env.certified_gap(), 0.2, 1e-12);
  EXPECT_EQ(env.fit().max_residual, 0.0);
}

TEST(Environment, RejectsUnrealizableFeatures) {
  // Constant features cannot express Q⋆ values that differ across actions.
  FeatureMap phi(2, 2, 2, 1, std::vector<double>(8, 1.0));
  EXPECT_THROW(Environment(EnvKind::kLinearMdp, 0, testing_fixtures::hand_mdp(), phi), ValidationError);
}

TEST(Environment, AllTiedActionsGiveInfiniteGap) {
  FiniteMdp mdp(1, 1, 2, {1, 1}, {0.5, 0.5});
  const Environment env(EnvKind::kTabularOneHot, 0, mdp, testing_fixtures::one_hot(1, 1, 2));
  EXPECT_EQ(env.certified_gap(), std::numeric_limits<double>::infinity());
}

TEST(Generate, ChainHorizonOneGapIsOneOverA) {
  for (int A : {2, 3, 5}) {
    const Environment env = generate(spec_of(EnvKind::kDeterministicChain, 1, 4, A, 2, 0.01, 7));
    EXPECT_NEAR(env.certified_gap(), 1.0 / A, 1e-12) << "A=" << A;
    EXPECT_LE(env.fit().max_residual, 1e-12);
  }
}

TEST(Generate, ChainTransitionsAreDeterministicShifts) {
  const Environment env = generate(spec_of(EnvKind::kDeterministicChain, 3, 4, 3, 2, 0.01, 2));
  const FiniteMdp& mdp = env.mdp();
  for (int h = 1; h <= 3; ++h) {
    for (State s = 0; s < 4; ++s) {
      for (Action a = 0; a < 3; ++a) {
        const auto row = mdp.transition_row(h, s, a);
        EXPECT_EQ(row[static_cast<std::size_t>((s + a + 1) % 4)], 1.0);
      }
    }
  }
}

TEST(Generate, LinearMdpMeetsRealizabilityAndGap) {
  const Environment env = generate(spec_of(EnvKind::kLinearMdp, 4, 20, 5, 4, 0.05, 11));
  EXPECT_LE(env.fit().max_residual, 1e-9);
  EXPECT_GE(env.certified_gap(), 0.05);
  const double norm_cap = 2.0 * 4 * std::sqrt(4.0);
  for (double n : env.fit().theta_norms) EXPECT_LE(n, norm_cap);
  EXPECT_EQ(env.dim(), 4);
}

TEST(Generate, LinearMdpPropertyOverSeeds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Environment env = generate(spec_of(EnvKind::kLinearMdp, 2, 3, 2, 2, 0.3, seed));
    EXPECT_LE(env.fit().max_residual, 1e-9) << seed;
    EXPECT_GE(env.certified_gap(), 0.3) << seed;
    for (double r : env.mdp().reward_data()) {
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
  }
}

TEST(Generate, TabularHasOneHotFeatures) {
  const Environment env = generate(spec_of(EnvKind::kTabularOneHot, 2, 2, 3, 6, 0.1, 5));
  EXPECT_EQ(env.dim(), 6);
  EXPECT_EQ(env.fit().max_residual, 0.0);
  for (int h = 1; h <= 2; ++h) {
    for (State s = 0; s < 2; ++s) {
      for (Action a = 0; a < 3; ++a) {
        const Vector& phi = env.features().phi(h, s, a);
        EXPECT_EQ(phi.sum(), 1.0);
        EXPECT_EQ(phi[s * 3 + a], 1.0);
      }
    }
  }
}

TEST(Generate, DeterministicInSpec) {
  const EnvSpec spec = spec_of(EnvKind::kLinearMdp, 3, 5, 3, 3, 0.1, 42);
  EXPECT_EQ(environment_to_json(generate(spec)), environment_to_json(generate(spec)));
  EnvSpec other = spec;
  other.seed = 43;
  EXPECT_NE(environment_to_json(generate(spec)), environment_to_json(generate(other)));
}

TEST(Generate, UnreachableGapReportsBestGap) {
  EnvSpec spec = spec_of(EnvKind::kTabularOneHot, 2, 2, 2, 4, 0.99, 1);
  spec.max_rejections = 5;
  try {
    generate(spec);
    FAIL() << "expected GenerationError";
  } catch (const GenerationError& e) {
    EXPECT_TRUE(std::isfinite(e.best_gap()));
    EXPECT_GT(e.best_gap(), 0.0);
    EXPECT_LT(e.best_gap(), 0.99);
  }
}

TEST(ValidateSpec, RejectsInconsistentDimensions) {
  EXPECT_THROW(validate_spec(spec_of(EnvKind::kLinearMdp, 2, 2, 2, 5, 0.1, 0)), UsageError);
  EXPECT_THROW(validate_spec(spec_of(EnvKind::kTabularOneHot, 2, 2, 2, 3, 0.1, 0)), UsageError);
  EXPECT_THROW(validate_spec(spec_of(EnvKind::kDeterministicChain, 2, 2, 2, 3, 0.1, 0)), UsageError);
  EXPECT_THROW(validate_spec(spec_of(EnvKind::kLinearMdp, 2, 2, 2, 2, 0.0, 0)), UsageError);
  EXPECT_THROW(validate_spec(spec_of(EnvKind::kLinearMdp, 0, 2, 2, 2, 0.1, 0)), UsageError);
  EXPECT_NO_THROW(validate_spec(spec_of(EnvKind::kLinearMdp, 2, 2, 2, 4, 0.1, 0)));
}

TEST(ParseEnvSpec, ReadsFieldsAndDefaultsTabularDim) {
  const EnvSpec spec =
      parse_env_spec(R"({"kind":"tabular_onehot","H":3,"S":2,"A":2,"gap_min":0.1,"seed":9})");
  EXPECT_EQ(spec.kind, EnvKind::kTabularOneHot);
  EXPECT_EQ(spec.horizon, 3);
  EXPECT_EQ(spec.dim, 4);
  EXPECT_EQ(spec.seed, 9u);
  EXPECT_THROW(parse_env_spec(R"({"kind":"linear_mdp","H":3})"), ParseError);
  EXPECT_THROW(parse_env_spec("{not json"), ParseError);
  EXPECT_THROW(parse_env_kind("grid"), UsageError);
}

TEST(Serialization, RoundTripIsBitwise) {
  const Environment env = generate(spec_of(EnvKind::kLinearMdp, 3, 6, 3, 3, 0.1, 8));
  const auto path = std::filesystem::temp_directory_path() / "linqrl_envgen_roundtrip.json";
  save_environment(env, path);
  const Environment back = load_environment(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.mdp().transition_data(), env.mdp().transition_data());
  EXPECT_EQ(back.mdp().reward_data(), env.mdp().reward_data());
  EXPECT_EQ(back.features().flatten(), env.features().flatten());
  EXPECT_EQ(back.certified_gap(), env.certified_gap());
  EXPECT_EQ(back.kind(), env.kind());
  EXPECT_EQ(back.seed(), env.seed());
  EXPECT_EQ(environment_to_json(back), environment_to_json(env));
}

std::string minimal_json(const std::string& transition, const std::string& phi) {
  return R"({"meta":{"kind":"linear_mdp","H":1,"S":2,"A":1,"d":2,"seed":0,"gap":null},)"
         R"("transition":)" + transition + R"(,"reward":[[[0.5],[0.25]]],"phi":)" + phi + "}";
}

TEST(Serialization, InvariantViolationsAreValidationErrors) {
  const std::string good_phi = "[[[[1,0]],[[0,1]]]]";
  EXPECT_THROW(environment_from_json(minimal_json("[[[[0.5,0.4]],[[0,1]]]]", good_phi)), ValidationError);
  EXPECT_THROW(environment_from_json(minimal_json("[[[[1,0]],[[0,1]]]]", "[[[[1.5,0]],[[0,1]]]]")),
               ValidationError);
}

TEST(Serialization, MalformedInputIsParseError) {
  EXPECT_THROW(environment_from_json("{"), ParseError);
  EXPECT_THROW(environment_from_json(R"({"meta":{}})"), ParseError);
  try {
    environment_from_json(minimal_json("[[[[1,0]],[[0]]]]", "[[[[1,0]],[[0,1]]]]"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("transition"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace linqrl
