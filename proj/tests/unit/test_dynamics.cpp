#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "harvest/dynamics.hpp"

using namespace harvest;

namespace {

ModelSpec noiseless(int model_id) {
  ModelSpec spec = base_model_spec(model_id);
  if (auto* p = std::get_if<ParamSet1>(&spec.params)) {
    p->sigma2 = 0.0;
  } else {
    auto& q = std::get<ParamSet3>(spec.params);
    q.sigma2_X = q.sigma2_Y = q.sigma2_Z = 0.0;
  }
  return spec;
}

Pops pops(std::initializer_list<double> v) {
  Pops p(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), p.data());
  return p;
}

// Real roots of a monic cubic from the eigenvalues of its companion matrix.
std::vector<double> companion_roots(double a, double b, double c) {
  Eigen::Matrix3d m;
  m << 0, 0, -c, 1, 0, -b, 0, 1, -a;
  Eigen::EigenSolver<Eigen::Matrix3d> es(m);
  std::vector<double> roots;
  for (int i = 0; i < 3; ++i)
    if (std::abs(es.eigenvalues()[i].imag()) < 1e-9) roots.push_back(es.eigenvalues()[i].real());
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace

TEST_CASE("logistic increment") {
  CHECK(logistic(0.0, 1.0, 1.0) == 0.0);
  CHECK(logistic(1.0, 1.0, 1.0) == 0.0);
  CHECK(logistic(0.5, 1.0, 1.0) == doctest::Approx(0.25));
}

TEST_CASE("predation term") {
  CHECK(predation(0.0, 1.0, 0.25, 0.1) == 0.0);
  CHECK(predation(0.1, 1.0, 0.25, 0.1) == doctest::Approx(0.125));
  CHECK(predation(0.48, 1.0, 0.25, 0.1) == doctest::Approx(0.23960).epsilon(1e-5));
}

TEST_CASE("three-species increment at the symmetric state") {
  const ModelSpec spec = base_model_spec(2);
  const Pops inc = natural_increment(spec, {pops({0.5, 0.5, 0.5}), 0});
  CHECK(inc[0] == doctest::Approx(0.11471).epsilon(1e-4));
  CHECK(inc[1] == doctest::Approx(0.10368).epsilon(1e-4));
  CHECK(inc[2] == doctest::Approx(0.0025).epsilon(1e-9));
}

TEST_CASE("model 1 increment vanishes at zero") {
  CHECK(natural_increment(base_model_spec(1), {pops({0.0}), 0})[0] == 0.0);
}

TEST_CASE("drifting growth rate") {
  CHECK(rx_at(0) == 1.0);
  CHECK(rx_at(50) == doctest::Approx(0.75));
  CHECK(rx_at(100) == 0.5);
  CHECK(rx_at(150) == 0.5);

  const ModelSpec m3 = base_model_spec(3), m4 = base_model_spec(4);
  const Pops p = pops({0.5, 0.5, 0.5});
  CHECK(natural_increment(m4, {p, 0}) == natural_increment(m3, {p, 0}));

  // At t = 100 the X increment uses r_X = 0.5.
  const auto& q = std::get<ParamSet3>(m4.params);
  const double expected = 0.5 * 0.5 * 0.5 - q.beta * 0.5 * 0.25 / (q.c * q.c + 0.25) - q.c_XY * 0.25;
  CHECK(natural_increment(m4, {p, 100})[0] == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("step: harvest then growth, hand example") {
  const ModelSpec spec = noiseless(1);
  Rng rng(1);
  const StepRecord rec = step(spec, {pops({0.6}), 0}, pops({0.2}), rng);
  CHECK(rec.harvest_reward == doctest::Approx(0.12));
  CHECK(rec.after.pops[0] == doctest::Approx(0.4900).epsilon(1e-4));
  CHECK_FALSE(rec.terminated);
  CHECK(rec.after.t == 1);
  CHECK(rec.penalty == 0.0);
}

TEST_CASE("step: full harvest terminates at t = 1") {
  const ModelSpec spec = base_model_spec(1);
  Rng rng(3);
  const StepRecord rec = step(spec, initial_state(spec), pops({1.0}), rng);
  CHECK(rec.terminated);
  CHECK(rec.cause == Cause::near_extinction);
  CHECK(rec.reward() == doctest::Approx(0.7 - 100.0));
}

TEST_CASE("step: interior fixed point is unchanged without harvest or noise") {
  const ModelSpec spec = noiseless(1);
  const auto rows = fixed_points_model1(std::get<ParamSet1>(spec.params), {0.25});
  REQUIRE(rows.front().equilibria.size() == 3);
  Rng rng(0);
  for (const auto& e : rows.front().equilibria) {
    if (e.x <= 0.05) continue;
    const StepRecord rec = step(spec, {pops({e.x}), 0}, pops({0.0}), rng);
    CHECK(rec.after.pops[0] == doctest::Approx(e.x).epsilon(1e-12));
  }
}

TEST_CASE("zero state is a fixed point of every model") {
  for (int m = 1; m <= 4; ++m) {
    const ModelSpec spec = base_model_spec(m);
    CHECK(natural_increment(spec, {Pops::Zero(spec.dim()), 0}).isZero(0.0));
  }
}

TEST_CASE("step: penalty is -100/t at termination") {
  ModelSpec spec = noiseless(1);
  // Start just above threshold and harvest into it at t = 24.
  Rng rng(0);
  const StepRecord rec = step(spec, {pops({0.5}), 24}, pops({0.95}), rng);
  CHECK(rec.terminated);
  CHECK(rec.after.t == 25);
  CHECK(rec.penalty == doctest::Approx(-4.0));
}

TEST_CASE("step: horizon ends the episode without penalty") {
  const ModelSpec spec = noiseless(1);
  Rng rng(0);
  const StepRecord rec = step(spec, {pops({0.58}), spec.horizon - 1}, pops({0.0}), rng);
  CHECK(rec.terminated);
  CHECK(rec.cause == Cause::horizon);
  CHECK(rec.penalty == 0.0);
}

TEST_CASE("step: rejects bad input") {
  const ModelSpec spec = base_model_spec(1);
  Rng rng(0);
  CHECK_THROWS_AS(step(spec, initial_state(spec), pops({1.5}), rng), std::invalid_argument);
  CHECK_THROWS_AS(step(spec, initial_state(spec), pops({0.1, 0.1}), rng), DimensionError);
  CHECK_THROWS_AS(step(spec, {pops({0.01}), 3}, pops({0.0}), rng), std::logic_error);
}

TEST_CASE("step: noisy populations stay non-negative and identical seeds reproduce") {
  const ModelSpec spec = base_model_spec(2);
  Rng a(11), b(11);
  SimState sa = initial_state(spec), sb = sa;
  for (int k = 0; k < 20 && !is_terminal(spec, sa); ++k) {
    const StepRecord ra = step(spec, sa, pops({0.1}), a);
    const StepRecord rb = step(spec, sb, pops({0.1}), b);
    CHECK((ra.after.pops.array() >= 0.0).all());
    CHECK(ra.after.pops == rb.after.pops);
    sa = ra.after;
    sb = rb.after;
  }
}

TEST_CASE("cubic solver agrees with companion-matrix eigenvalues") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double a = u(rng), b = u(rng), c = u(rng);
    const auto expected = companion_roots(a, b, c);
    auto got = solve_cubic(a, b, c);
    std::sort(got.begin(), got.end());
    // Near-double roots are ill-conditioned for the eigen oracle; skip them.
    bool close_pair = false;
    for (std::size_t i = 1; i < expected.size(); ++i) close_pair |= expected[i] - expected[i - 1] < 1e-3;
    if (close_pair) continue;
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-8));
  }
}

TEST_CASE("fixed points of the single-species model") {
  ParamSet1 p;
  const auto rows = fixed_points_model1(p, {0.0, 0.25, 0.5});

  REQUIRE(rows[0].equilibria.size() == 1);
  CHECK(rows[0].equilibria[0].x == doctest::Approx(1.0));
  CHECK(rows[0].equilibria[0].stable);

  const auto& mid = rows[1].equilibria;
  REQUIRE(mid.size() == 3);
  CHECK(mid[0].x == doctest::Approx(0.046).epsilon(0.02));
  CHECK(mid[1].x == doctest::Approx(0.370).epsilon(0.01));
  CHECK(mid[2].x == doctest::Approx(0.584).epsilon(0.01));
  CHECK(mid[0].stable);
  CHECK_FALSE(mid[1].stable);
  CHECK(mid[2].stable);
  const auto oracle = companion_roots(-1.0, 0.26, -0.01);
  for (std::size_t i = 0; i < 3; ++i) CHECK(mid[i].x == doctest::Approx(oracle[i]).epsilon(1e-10));

  REQUIRE(rows[2].equilibria.size() == 1);
  CHECK(rows[2].equilibria[0].x == doctest::Approx(0.021).epsilon(0.05));
}

TEST_CASE("equilibrium count along the default scan drops from 3 to 1 once") {
  std::vector<double> grid;
  for (int k = 0; k <= 50; ++k) grid.push_back(0.10 + 0.01 * k);
  const auto rows = fixed_points_model1(ParamSet1{}, grid);
  int drops = 0;
  bool seen_three_after_drop = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto prev = rows[i - 1].equilibria.size(), cur = rows[i].equilibria.size();
    if (prev == 3 && cur == 1) ++drops;
    if (drops > 0 && cur == 3) seen_three_after_drop = true;
  }
  CHECK(drops == 1);
  CHECK_FALSE(seen_three_after_drop);
}

TEST_CASE("natural range bounds") {
  ModelSpec spec = noiseless(1);
  spec.initial_state = pops({1.0});
  auto& p = std::get<ParamSet1>(spec.params);
  p.beta = 0.0;
  Rng rng(0);
  CHECK(natural_range_bounds(spec, 3, rng)[0] == doctest::Approx(1.25));
  CHECK_THROWS(natural_range_bounds(spec, 0, rng));

  const ModelSpec m2 = base_model_spec(2);
  Rng rng2(7);
  const Pops b = natural_range_bounds(m2, 100, rng2);
  CHECK((b.array() >= 1.0).all());
}

TEST_CASE("default model specs validate and differ only where expected") {
  for (int m = 1; m <= 4; ++m) {
    const ModelSpec spec = default_model_spec(m);
    CHECK_NOTHROW(spec.validate());
    CHECK(spec.obs_bounds.size() == spec.dim());
    CHECK(spec.horizon == 200);
    CHECK((spec.thresholds.array() == 0.05).all());
  }
  CHECK(base_model_spec(2).harvested == std::vector<int>{0});
  CHECK(base_model_spec(3).harvested == std::vector<int>{0, 1});
  CHECK(base_model_spec(4).rx_schedule.enabled);
  CHECK(default_model_spec(3) == default_model_spec(3));
  CHECK_FALSE(base_model_spec(3) == base_model_spec(4));
}
