#include <doctest.h>

#include <cmath>

#include "motionhmm/selection.hpp"
#include "motionhmm/synth.hpp"

using namespace motionhmm;

TEST_CASE("separation distance on shifted equal-spread populations") {
  for (double sigma : {0.5, 1.0, 2.0}) {
    CHECK(wasserstein_distance(4.0, sigma, 0.0, sigma) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK(wasserstein_distance(0.0, sigma, 4.0, sigma) ==
          doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("separation distance on equal-mean different-spread populations") {
  // |dmu| = 0, 9 + 1 - 2*sqrt(9) = 4
  CHECK(wasserstein_distance(7.0, 3.0, 7.0, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(wasserstein_distance(7.0, 1.0, 7.0, 3.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("identical populations have zero separation") {
  CHECK(wasserstein_distance(5.0, 2.0, 5.0, 2.0) == 0.0);
}

TEST_CASE("set score is the median separation per dimension") {
  CHECK(score_feature_set({10.0}, 5) == 2.0);
  CHECK(score_feature_set({1.0, 2.0, 3.0}, 1) == 2.0);
  // even count: mean of the two central values, (2+3)/2 / 2
  CHECK(score_feature_set({1.0, 2.0, 3.0, 4.0}, 2) == 1.25);
}

TEST_CASE("backward elimination drops the noise feature first") {
  SynthSpec spec;
  spec.classes = {{{"a"}}, {{"b"}}};
  spec.sequences_per_class = 8;
  spec.frames = 24;
  spec.dim = 3;   // informative root_pos
  spec.states = 2;
  spec.seed = 77;
  spec.noise_joint_dims = 2;  // pure-noise joint_pos columns
  Dataset ds = synth_dataset(spec);

  SelectionConfig cfg;
  cfg.folds = 2;
  cfg.model.num_states = 2;
  cfg.model.topology = Topology{TopologyKind::kLeftToRight, 1};
  cfg.model.iterations = 3;
  cfg.normalized = false;
  cfg.smoothed = false;
  cfg.scaled = true;
  cfg.seed = 5;
  auto trace = backward_eliminate(ds, {"root_pos", "joint_pos"}, cfg);
  // two candidates reduced to one: a single elimination round
  REQUIRE(trace.size() == 1);
  CHECK(trace[0].round == 1);
  CHECK(trace[0].dropped == "joint_pos");
  CHECK(trace[0].features == std::vector<std::string>{"root_pos"});
  CHECK(trace[0].dimension == 3);
  for (const auto& round : trace) CHECK(std::isfinite(round.score));

  // deterministic under the same config
  auto trace2 = backward_eliminate(ds, {"root_pos", "joint_pos"}, cfg);
  REQUIRE(trace2.size() == trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    CHECK(trace2[i].score == trace[i].score);
    CHECK(trace2[i].dropped == trace[i].dropped);
  }

  auto csv = elimination_trace_csv(trace);
  CHECK(csv.find("joint_pos") != std::string::npos);
  CHECK(csv.find("round,score,dimension,dropped") != std::string::npos);
  CHECK(elimination_trace_text(trace).find("root_pos") != std::string::npos);
}

TEST_CASE("evaluate_feature_set scores informative sets above noise-only sets") {
  SynthSpec spec;
  spec.classes = {{{"a"}}, {{"b"}}};
  spec.sequences_per_class = 6;
  spec.frames = 20;
  spec.dim = 3;
  spec.states = 2;
  spec.seed = 9;
  spec.noise_joint_dims = 3;
  Dataset ds = synth_dataset(spec);
  SelectionConfig cfg;
  cfg.folds = 2;
  cfg.model.num_states = 2;
  cfg.model.iterations = 3;
  cfg.normalized = false;
  cfg.scaled = true;
  cfg.seed = 21;
  double informative = evaluate_feature_set(ds, {"root_pos"}, cfg);
  double noise = evaluate_feature_set(ds, {"joint_pos"}, cfg);
  CHECK(std::isfinite(informative));
  CHECK(std::isfinite(noise));
  CHECK(informative > noise);
}
