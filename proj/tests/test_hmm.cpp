#include <doctest.h>

#include <cmath>

#include "motionhmm/errors.hpp"
#include "motionhmm/hmm.hpp"
#include "motionhmm/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace motionhmm;



TEST_CASE("init_transition left-to-right uniform, K=3 delta=1") {
  auto init = init_transition(3, Topology{TopologyKind::kLeftToRight, 1},
                              InitMode::kUniform, 0);
  CHECK(init.start == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(init.transition(0, 0) == 0.5);
  CHECK(init.transition(0, 1) == 0.5);
  CHECK(init.transition(0, 2) == 0.0);
  CHECK(init.transition(1, 0) == 0.0);
  CHECK(init.transition(1, 1) == 0.5);
  CHECK(init.transition(1, 2) == 0.5);
  CHECK(init.transition(2, 2) == 1.0);
  CHECK(init.mask == std::vector<std::uint8_t>{1, 1, 0, 0, 1, 1, 0, 0, 1});
}

TEST_CASE("init_transition ergodic uniform spreads evenly") {
  auto init = init_transition(4, Topology{TopologyKind::kErgodic, {}},
                              InitMode::kUniform, 0);
  for (std::size_t k = 0; k < 4; ++k) CHECK(init.start[k] == 0.25);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(init.transition(i, j) == 0.25);
}

TEST_CASE("init_transition randomized: stochastic rows, zeros preserved, deterministic") {
  Topology ltr{TopologyKind::kLeftToRight, 1};
  auto a = init_transition(4, ltr, InitMode::kRandom, 77);
  auto b = init_transition(4, ltr, InitMode::kRandom, 77);
  CHECK(a.transition == b.transition);
  CHECK(a.start == b.start);
  CHECK(a.start == std::vector<double>{1.0, 0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < 4; ++i) {
    double rs = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      if (!a.mask[i * 4 + j]) CHECK(a.transition(i, j) == 0.0);
      rs += a.transition(i, j);
    }
    CHECK(rs == doctest::Approx(1.0).epsilon(1e-12));
  }
  // different seeds give different draws
  auto c = init_transition(4, ltr, InitMode::kRandom, 78);
  CHECK(a.transition(0, 0) != c.transition(0, 0));
}

TEST_CASE("init_transition delta >= K behaves as unconstrained left-to-right") {
  auto wide = init_transition(3, Topology{TopologyKind::kLeftToRight, 7},
                              InitMode::kUniform, 0);
  auto open = init_transition(3, Topology{TopologyKind::kLeftToRight, {}},
                              InitMode::kUniform, 0);
  CHECK(wide.transition == open.transition);
  CHECK(wide.mask == open.mask);
}

TEST_CASE("diagonal gaussian log density at the mean") {
  std::vector<double> x{1.0, -2.0}, mean{1.0, -2.0}, var{0.25, 4.0};
  CHECK(diag_gaussian_log_density(x, mean, var) ==
        doctest::Approx(-1.8378770664093456).epsilon(1e-14));
}

TEST_CASE("single-state log-likelihood is the sum of frame densities") {
  HmmParams m;
  m.num_states = 1;
  m.dim = 1;
  m.start = {1.0};
  m.transition = Matrix(1, 1, 1.0);
  m.means = Matrix(1, 1, 0.2);
  m.covariances = Matrix(1, 1, 0.5);
  m.transition_mask = {1};
  ObservationSequence s;
  s.frames = Matrix::from_rows({{0.5}, {-0.25}, {1.0}});
  CHECK(log_likelihood(m, s) == doctest::Approx(-2.6495948287741005).epsilon(1e-14));
}

TEST_CASE("forward matches a hand-enumerated two-state case") {
  HmmParams m;
  m.num_states = 2;
  m.dim = 1;
  m.start = {0.6, 0.4};
  m.transition = Matrix::from_rows({{0.7, 0.3}, {0.4, 0.6}});
  m.means = Matrix::from_rows({{0.0}, {1.0}});
  m.covariances = Matrix(2, 1, 1.0);
  m.transition_mask = {1, 1, 1, 1};
  ObservationSequence s;
  s.frames = Matrix::from_rows({{0.2}, {0.9}});
  CHECK(log_likelihood(m, s) == doctest::Approx(-2.193070836646786).epsilon(1e-13));
}

TEST_CASE("forward agrees with exhaustive path enumeration on random models") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t K = 1 + rng.next_below(3);
    std::size_t D = 1 + rng.next_below(2);
    std::size_t T = 1 + rng.next_below(6);
    auto m = fixtures::random_hmm(K, D, rng);
    auto s = fixtures::random_obs(T, D, rng);
    double expected = oracle::hmm_loglik_by_enumeration(m.start, m.transition,
                                                        m.means, m.covariances,
                                                        s.frames);
    CHECK(std::abs(log_likelihood(m, s) - expected) <= 1e-8);
  }
}

TEST_CASE("forward respects left-to-right support") {
  // build a left-to-right model by hand and compare against enumeration
  Rng rng(55);
  auto init = init_transition(3, Topology{TopologyKind::kLeftToRight, 1},
                              InitMode::kRandom, 9);
  HmmParams m;
  m.num_states = 3;
  m.dim = 1;
  m.start = init.start;
  m.transition = init.transition;
  m.transition_mask = init.mask;
  m.means = Matrix::from_rows({{-1.0}, {0.0}, {1.0}});
  m.covariances = Matrix(3, 1, 0.3);
  auto s = fixtures::random_obs(5, 1, rng);
  double expected = oracle::hmm_loglik_by_enumeration(m.start, m.transition,
                                                      m.means, m.covariances,
                                                      s.frames);
  CHECK(std::abs(log_likelihood(m, s) - expected) <= 1e-8);
}

TEST_CASE("state posteriors are row-stochastic") {
  Rng rng(400);
  auto m = fixtures::random_hmm(3, 2, rng);
  auto s = fixtures::random_obs(12, 2, rng);
  Matrix g = state_posteriors(m, s);
  REQUIRE(g.rows() == 12);
  for (std::size_t t = 0; t < g.rows(); ++t) {
    double rs = 0.0;
    for (std::size_t k = 0; k < g.cols(); ++k) {
      CHECK(g(t, k) >= 0.0);
      rs += g(t, k);
    }
    CHECK(rs == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("viterbi finds the dominant path and never exceeds the total likelihood") {
  HmmParams m;
  m.num_states = 2;
  m.dim = 1;
  m.start = {0.5, 0.5};
  m.transition = Matrix::from_rows({{0.1, 0.9}, {0.9, 0.1}});
  m.means = Matrix::from_rows({{0.0}, {10.0}});
  m.covariances = Matrix(2, 1, 1.0);
  m.transition_mask = {1, 1, 1, 1};
  ObservationSequence s;
  s.frames = Matrix::from_rows({{0.0}, {10.0}});
  auto vr = viterbi(m, s);
  CHECK(vr.path == std::vector<std::size_t>{0, 1});
  CHECK(vr.log_prob == doctest::Approx(-2.636384762627117).epsilon(1e-13));
  CHECK(vr.log_prob <= log_likelihood(m, s) + 1e-12);
}

TEST_CASE("viterbi ties resolve to the lower state index") {
  // fully symmetric model: every path has identical probability
  HmmParams m;
  m.num_states = 2;
  m.dim = 1;
  m.start = {0.5, 0.5};
  m.transition = Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
  m.means = Matrix::from_rows({{0.0}, {0.0}});
  m.covariances = Matrix(2, 1, 1.0);
  m.transition_mask = {1, 1, 1, 1};
  ObservationSequence s;
  s.frames = Matrix::from_rows({{0.3}, {-0.2}, {0.1}});
  auto vr = viterbi(m, s);
  CHECK(vr.path == std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("viterbi agrees with enumeration on random models") {
  Rng rng(31337);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t K = 1 + rng.next_below(3);
    std::size_t T = 1 + rng.next_below(5);
    auto m = fixtures::random_hmm(K, 2, rng);
    auto s = fixtures::random_obs(T, 2, rng);
    auto expected = oracle::hmm_viterbi_by_enumeration(m.start, m.transition,
                                                       m.means, m.covariances,
                                                       s.frames);
    auto got = viterbi(m, s);
    CHECK(std::abs(got.log_prob - expected.log_prob) <= 1e-9);
    CHECK(got.path == expected.path);
  }
}

TEST_CASE("k-means recovers two well-separated 1-D clouds") {
  ObservationSequence s;
  s.frames = Matrix::from_rows({{0.0}, {0.1}, {0.2}, {10.0}, {10.1}, {10.2}});
  auto init = init_emission_kmeans(std::span(&s, 1), 2, 123);
  std::vector<double> centers{init.means(0, 0), init.means(1, 0)};
  std::sort(centers.begin(), centers.end());
  CHECK(centers[0] == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(centers[1] == doctest::Approx(10.1).epsilon(1e-9));
  // variance of {0,.1,.2} is 0.00666..., above the floor
  CHECK(init.variances(0, 0) == doctest::Approx(0.2 / 30.0).epsilon(1e-9));
}

TEST_CASE("k-means is deterministic and floors variances") {
  Rng rng(9);
  std::vector<ObservationSequence> seqs;
  for (int i = 0; i < 3; ++i) seqs.push_back(fixtures::random_obs(20, 2, rng));
  auto a = init_emission_kmeans(seqs, 4, 55);
  auto b = init_emission_kmeans(seqs, 4, 55);
  CHECK(a.means == b.means);
  CHECK(a.variances == b.variances);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t d = 0; d < 2; ++d) CHECK(a.variances(k, d) >= 1e-4);
  // constant data in one dimension pins that variance to the floor
  ObservationSequence flat;
  flat.frames = Matrix(6, 1, 3.0);
  flat.frames(3, 0) = 4.0;  // two distinct frames so K=2 is feasible
  auto c = init_emission_kmeans(std::span(&flat, 1), 2, 1);
  CHECK(c.variances(0, 0) == 1e-4);
  CHECK(c.variances(1, 0) == 1e-4);
}

TEST_CASE("k-means rejects K larger than the number of distinct frames") {
  ObservationSequence s;
  s.frames = Matrix(5, 2, 1.0);  // one distinct frame
  CHECK_THROWS_AS(init_emission_kmeans(std::span(&s, 1), 2, 0), validation_error);
}

TEST_CASE("random emission init: deterministic, PSD covariance, bounded means") {
  auto a = init_emission_random(3, 4, false, 42);
  auto b = init_emission_random(3, 4, false, 42);
  CHECK(a.means == b.means);
  REQUIRE(a.covariances.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(a.covariances[k] == b.covariances[k]);
    auto ev = oracle::symmetric_eigenvalues(a.covariances[k]);
    for (double e : ev) CHECK(e >= -1e-12);
    for (std::size_t d = 0; d < 4; ++d) {
      CHECK(a.means(k, d) >= -1.0);
      CHECK(a.means(k, d) <= 1.0);
    }
  }
  auto diag = init_emission_random(3, 4, true, 42);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        if (i == j) {
          CHECK(diag.covariances[k](i, j) == a.covariances[k](i, j));
          CHECK(diag.covariances[k](i, i) > 0.0);
        } else {
          CHECK(diag.covariances[k](i, j) == 0.0);
        }
      }
}

TEST_CASE("training raises the data likelihood monotonically") {
  Rng rng(606);
  // generator: left-to-right chain the data actually follows
  auto gen_init = init_transition(4, Topology{TopologyKind::kLeftToRight, 1},
                                  InitMode::kUniform, 0);
  HmmParams gen;
  gen.num_states = 4;
  gen.dim = 2;
  gen.topology = Topology{TopologyKind::kLeftToRight, 1};
  gen.start = gen_init.start;
  gen.transition = gen_init.transition;
  gen.transition_mask = gen_init.mask;
  gen.means = Matrix::from_rows({{0, 0}, {2, 1}, {4, 2}, {6, 3}});
  gen.covariances = Matrix(4, 2, 0.25);
  std::vector<ObservationSequence> data;
  for (int i = 0; i < 4; ++i) data.push_back(sample(gen, 30, 100 + i));

  HmmParams model = make_hmm(4, 2, Topology{TopologyKind::kLeftToRight, 1},
                             InitMode::kUniform, 7, data);
  TrainConfig cfg;
  cfg.iterations = 8;
  std::vector<double> history;
  HmmParams fitted = train(model, data, cfg, &history);
  REQUIRE(history.size() == 8);
  for (std::size_t i = 1; i < history.size(); ++i) {
    double slack = 1e-8 * std::max(1.0, std::abs(history[i - 1]));
    CHECK(history[i] >= history[i - 1] - slack);
  }
  // support, stochasticity, floor
  for (std::size_t i = 0; i < 4; ++i) {
    double rs = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      if (!fitted.allows(i, j)) CHECK(fitted.transition(i, j) == 0.0);
      rs += fitted.transition(i, j);
    }
    CHECK(std::abs(rs - 1.0) <= 1e-9);
    for (std::size_t d = 0; d < 2; ++d) CHECK(fitted.covariances(i, d) >= 1e-4);
  }
  CHECK(fitted.start[0] == 1.0);
  CHECK(fitted.start[1] == 0.0);
}

TEST_CASE("single-state training recovers pooled moments in one step") {
  HmmParams m;
  m.num_states = 1;
  m.dim = 1;
  m.start = {1.0};
  m.transition = Matrix(1, 1, 1.0);
  m.means = Matrix(1, 1, 5.0);
  m.covariances = Matrix(1, 1, 2.0);
  m.transition_mask = {1};
  ObservationSequence s;
  s.frames = Matrix::from_rows({{1.0}, {2.0}, {3.0}, {6.0}});
  TrainConfig cfg;
  cfg.iterations = 1;
  auto fitted = train(m, std::span(&s, 1), cfg);
  CHECK(fitted.means(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
  // population variance of {1,2,3,6} around 3 is (4+1+0+9)/4 = 3.5
  CHECK(fitted.covariances(0, 0) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("training is deterministic given the seed and batched over sequences") {
  Rng rng(15);
  std::vector<ObservationSequence> data;
  for (int i = 0; i < 3; ++i) data.push_back(fixtures::random_obs(25, 2, rng));
  Topology top{TopologyKind::kErgodic, {}};
  auto m1 = make_hmm(3, 2, top, InitMode::kUniform, 99, data);
  auto m2 = make_hmm(3, 2, top, InitMode::kUniform, 99, data);
  TrainConfig cfg;
  cfg.iterations = 5;
  auto f1 = train(m1, data, cfg);
  auto f2 = train(m2, data, cfg);
  CHECK(f1.transition == f2.transition);
  CHECK(f1.means == f2.means);
  CHECK(f1.covariances == f2.covariances);
  CHECK(f1.start == f2.start);
}

TEST_CASE("sampling is reproducible and tracks the model") {
  Rng rng(21);
  auto m = fixtures::random_hmm(3, 2, rng);
  auto s1 = sample(m, 200, 77);
  auto s2 = sample(m, 200, 77);
  CHECK(s1.frames == s2.frames);
  CHECK(s1.frames.rows() == 200);
  // every frame within 6 sigma of some state's mean
  double max_sigma = 0.0;
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t d = 0; d < 2; ++d)
      max_sigma = std::max(max_sigma, std::sqrt(m.covariances(k, d)));
  for (std::size_t t = 0; t < s1.frames.rows(); ++t) {
    bool near_any = false;
    for (std::size_t k = 0; k < 3 && !near_any; ++k) {
      bool ok = true;
      for (std::size_t d = 0; d < 2; ++d) {
        double sigma = std::sqrt(m.covariances(k, d));
        if (std::abs(s1.frames(t, d) - m.means(k, d)) > 6.0 * sigma) ok = false;
      }
      near_any = ok;
    }
    CHECK(near_any);
  }
}

TEST_CASE("hmm json round-trips exactly") {
  Rng rng(3);
  auto m = fixtures::random_hmm(3, 2, rng);
  m.topology = Topology{TopologyKind::kLeftToRight, 2};
  std::string text = hmm_to_json(m);
  HmmParams back = hmm_from_json(text);
  CHECK(back.num_states == m.num_states);
  CHECK(back.dim == m.dim);
  CHECK(back.start == m.start);
  CHECK(back.transition == m.transition);
  CHECK(back.means == m.means);
  CHECK(back.covariances == m.covariances);
  CHECK(back.transition_mask == m.transition_mask);
  CHECK(back.topology.kind == m.topology.kind);
  REQUIRE(back.topology.max_skip.has_value());
  CHECK(*back.topology.max_skip == 2);
  CHECK(hmm_to_json(back) == text);
}

TEST_CASE("validate_hmm rejects broken models") {
  Rng rng(5);
  auto m = fixtures::random_hmm(2, 1, rng);
  CHECK_NOTHROW(validate_hmm(m));
  auto bad = m;
  bad.transition(0, 0) += 0.5;  // row no longer sums to one
  CHECK_THROWS_AS(validate_hmm(bad), validation_error);
  bad = m;
  bad.covariances(0, 0) = -1.0;
  CHECK_THROWS_AS(validate_hmm(bad), validation_error);
  bad = m;
  bad.transition_mask[1] = 0;  // support says zero but transition is not
  CHECK_THROWS_AS(validate_hmm(bad), validation_error);
}
