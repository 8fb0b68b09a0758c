#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fieldroad/simulate.hpp"
#include "fieldroad/steady.hpp"

using namespace fieldroad;

namespace {

SimConfig imex(double dt, double T = 1.0) {
  SimConfig c;
  c.dt = dt;
  c.T = T;
  c.record_every = 1;
  return c;
}

State random_state(const StripGrid& g, std::mt19937_64& rng, double cap_u) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  State s = State::zero(g);
  for (std::size_t i = 0; i < g.nx; ++i) s.u(i) = cap_u * U(rng);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) s.v(i, j) = U(rng);
  return s;
}

}  // namespace

TEST(Step, ZeroIsStationary) {
  ModelParams p;
  p.R = 3.0;
  const auto g = build_grid(p, 8, 8);
  const Stepper st(p, ReactionSpec::logistic(1.0), g, imex(0.1));
  State s = State::zero(g);
  for (int n = 0; n < 20; ++n) s = st.advance(s);
  EXPECT_EQ(s.w.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Step, AboveCapacityDecreases) {
  ModelParams p;
  p.mu = 2.0;
  p.nu = 1.0;
  p.R = 3.0;
  const auto g = build_grid(p, 8, 8);
  const Stepper st(p, ReactionSpec::logistic(1.0), g, imex(0.05));
  State s = State::zero(g);
  s.u().setConstant(2.0 * p.road_capacity());
  s.w.tail(static_cast<Eigen::Index>(g.nx * g.ny)).setConstant(2.0);
  double prev_norm = s.w.maxCoeff();
  for (int n = 0; n < 100; ++n) {
    const State next = st.advance(s);
    EXPECT_TRUE(((next.w - s.w).array() < 0.0).all()) << "step " << n;
    const double norm = next.w.maxCoeff();
    EXPECT_LT(norm, prev_norm);
    prev_norm = norm;
    s = next;
  }
}

TEST(Step, OrderPreservedBothSchemes) {
  ModelParams p;
  p.D = 2.0;
  p.R = 2.0;
  const auto spec = ReactionSpec::logistic(1.0, {0.5});
  const auto g = build_grid(p, 8, 8);
  std::mt19937_64 rng(11);
  for (Scheme scheme : {Scheme::IMEX_BE, Scheme::Explicit}) {
    SimConfig c = imex(scheme == Scheme::IMEX_BE ? 0.1 : explicit_dt_max(p, spec, g));
    c.scheme = scheme;
    const Stepper st(p, spec, g, c);
    for (int trial = 0; trial < 5; ++trial) {
      State lo = random_state(g, rng, 0.5 * p.road_capacity());
      State hi = lo;
      hi.w += random_state(g, rng, 0.5 * p.road_capacity()).w * 0.5;
      for (int n = 0; n < 20; ++n) {
        lo = st.advance(lo);
        hi = st.advance(hi);
        ASSERT_TRUE((hi.w.array() >= lo.w.array()).all());
        ASSERT_TRUE((lo.w.array() >= 0.0).all());
      }
    }
  }
}

TEST(Step, InvariantRegion) {
  ModelParams p;
  p.mu = 0.5;
  p.nu = 2.0;
  p.R = 2.0;
  const auto g = build_grid(p, 8, 8);
  const Stepper st(p, ReactionSpec::logistic(1.0, {0.5}), g, imex(0.2));
  std::mt19937_64 rng(3);
  State s = random_state(g, rng, p.road_capacity());
  for (int n = 0; n < 50; ++n) {
    s = st.advance(s);
    ASSERT_LE(s.u().maxCoeff(), p.road_capacity());
    ASSERT_LE(s.v_flat().maxCoeff(), 1.0);
    ASSERT_GE(s.w.minCoeff(), 0.0);
  }
}

TEST(SimConfig, TimeStepBounds) {
  ModelParams p;
  const auto spec = ReactionSpec::logistic(2.0);
  const auto g = build_grid(p, 8, 8);
  EXPECT_NO_THROW(Stepper(p, spec, g, imex(0.25)));
  EXPECT_THROW(Stepper(p, spec, g, imex(0.26)), ConfigError);
  SimConfig c = imex(1.01 * explicit_dt_max(p, spec, g));
  c.scheme = Scheme::Explicit;
  EXPECT_THROW(Stepper(p, spec, g, c), ConfigError);
  const double cfl = 1.0 / (2.0 * (1.0 / (g.dx * g.dx) + 1.0 / (g.dy * g.dy)) + 2.0);
  EXPECT_LE(explicit_dt_max(p, spec, g), cfl);
}

TEST(Simulate, ZeroFinalTimeKeepsOnlyInitial) {
  ModelParams p;
  const auto g = build_grid(p, 8, 8);
  const auto init = bump_init(p, g, 0.5, 0.3, 0.5, 0.5);
  const auto tr = simulate(init, p, ReactionSpec::logistic(1.0), g, imex(0.1, 0.0), {sup_norm_probe()});
  ASSERT_EQ(tr.snapshots.size(), 1u);
  EXPECT_EQ(tr.snapshots[0].w, init.w);
  EXPECT_EQ(tr.probes.size(), 1u);
}

TEST(Simulate, SnapshotsAndProbes) {
  ModelParams p;
  const auto g = build_grid(p, 8, 8);
  SimConfig c = imex(0.1, 1.0);
  c.record_every = 3;
  const auto tr = simulate(bump_init(p, g, 0.5, 0.3, 0.5, 0.5), p, ReactionSpec::logistic(1.0), g, c,
                           {sup_norm_probe()});
  EXPECT_EQ(tr.snapshots.size(), 4u);  // initial + steps 3, 6, 9
  EXPECT_EQ(tr.probes.size(), 11u);
  EXPECT_NEAR(tr.snapshots.back().t, 0.9, 1e-12);
}

TEST(Simulate, Deterministic) {
  ModelParams p;
  p.R = 2.0;
  const auto g = tile_window(build_grid(p, 8, 8), 20);
  SimConfig c = imex(0.05, 1.0);
  c.guard_periods = 0.0;
  const auto spec = ReactionSpec::logistic(1.0, {0.5});
  const auto init = bump_init(p, g, 10.0, 2.0, 1.0, 1.0);
  const auto a = simulate(init, p, spec, g, c);
  const auto b = simulate(init, p, spec, g, c);
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) EXPECT_EQ(a.snapshots[k].w, b.snapshots[k].w);
}

TEST(Simulate, PersistenceAboveThreshold) {
  ModelParams p;
  p.R = 4.0;
  const auto spec = ReactionSpec::logistic(1.0);
  const auto g = build_grid(p, 64, 16);
  const auto st = compute_steady(p, spec, g, 1e-9);
  const auto tr = simulate(bump_init(p, g, 0.5, 0.3, 0.2, 0.2), p, spec, g, imex(0.25, 60.0));
  EXPECT_LT((tr.snapshots.back().w - st.to_state().w).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(Simulate, DecayBelowThreshold) {
  ModelParams p;
  p.R = 1.0;
  const auto spec = ReactionSpec::logistic(1.0);
  const auto g = build_grid(p, 16, 16);
  SimConfig c = imex(0.25, 40.0);
  c.record_every = 20;
  const auto tr = simulate(bump_init(p, g, 0.5, 0.3, 1.0, 1.0), p, spec, g, c);
  double prev = tr.snapshots.front().w.maxCoeff();
  for (std::size_t k = 1; k < tr.snapshots.size(); ++k) {
    const double now = tr.snapshots[k].w.maxCoeff();
    EXPECT_LT(now, prev);
    prev = now;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Simulate, GuardAbortsWhenFrontNearsEnd) {
  ModelParams p;
  p.R = 2.0;
  const auto g = tile_window(build_grid(p, 8, 8), 12);
  SimConfig c = imex(0.1, 20.0);
  EXPECT_THROW(simulate(bump_init(p, g, 6.0, 2.0, 1.0, 1.0), p, ReactionSpec::logistic(1.0), g, c), NumericalError);
}

TEST(BumpInit, ZeroAmplitude) {
  ModelParams p;
  const auto g = build_grid(p, 8, 8);
  EXPECT_EQ(bump_init(p, g, 0.5, 0.3, 0.0, 0.0).w.cwiseAbs().maxCoeff(), 0.0);
}

TEST(BumpInit, SupportAndCap) {
  ModelParams p;
  p.R = 2.0;
  const auto g = tile_window(build_grid(p, 8, 8), 10);
  const double c = 5.0, w = 1.5;
  const auto s = bump_init(p, g, c, w, 1.0, 1.0);
  for (std::size_t i = 0; i < g.nx; ++i) {
    if (std::abs(g.x(i) - c) >= w) {
      EXPECT_EQ(s.u(i), 0.0);
      for (std::size_t j = 0; j < g.ny; ++j) EXPECT_EQ(s.v(i, j), 0.0);
    }
    EXPECT_EQ(s.v(i, g.ny), 0.0);
  }
  EXPECT_EQ(s.u(40), 1.0);
  EXPECT_EQ(s.v(40, 0), 1.0);
}

TEST(BumpInit, AboveCapacityRejected) {
  ModelParams p;
  p.mu = 2.0;
  const auto g = build_grid(p, 8, 8);
  EXPECT_THROW(bump_init(p, g, 0.5, 0.3, 0.6, 0.5), ConfigError);
  EXPECT_THROW(bump_init(p, g, 0.5, 0.3, 0.5, 1.1), ConfigError);
  EXPECT_THROW(bump_init(p, g, 0.5, 0.0, 0.5, 0.5), ConfigError);
}

TEST(Subsolution, ShapeAtRPi) {
  ModelParams p;
  p.R = std::numbers::pi;
  const auto spec = ReactionSpec::logistic(1.0);
  const auto sh = subsolution_shape(p, spec);
  EXPECT_NEAR(sh.delta, 0.1, 1e-15);
  EXPECT_NEAR(sh.beta, 1.05 * std::numbers::pi / (2.0 * p.R), 1e-15);
  EXPECT_GT(sh.beta, std::numbers::pi / (2.0 * p.R));
  EXPECT_LT(sh.beta, std::numbers::pi / p.R);
  EXPECT_LT(p.d * sh.beta * sh.beta, 1.0 - sh.delta);
  EXPECT_NEAR(sh.omega * sh.omega, sh.kappa, 1e-14);

  const auto g = tile_window(build_grid_dy(p, 16, std::numbers::pi / 20), 20);
  const auto s = kpp_subsolution(p, spec, g, 0.01, 10.0);
  EXPECT_GT(s.w.maxCoeff(), 0.0);
  const std::size_t ic = 160;
  for (std::size_t j = 0; j < g.ny; ++j) EXPECT_GT(s.v(ic, j), 0.0);
  EXPECT_NEAR(s.u(ic), 0.01, 1e-15);
}

TEST(Subsolution, BelowThresholdIsDomainError) {
  ModelParams p;
  p.R = 1.0;
  const auto g = build_grid(p, 8, 8);
  EXPECT_THROW(kpp_subsolution(p, ReactionSpec::logistic(1.0), g, 0.01, 0.5), DomainError);
}

TEST(Subsolution, StepIncreasesWherePositive) {
  ModelParams p;
  p.R = std::numbers::pi;
  const auto spec = ReactionSpec::logistic(1.0);
  const auto g = tile_window(build_grid_dy(p, 16, std::numbers::pi / 20), 20);
  SimConfig c = imex(0.1);
  c.guard_periods = 0.0;
  const Stepper st(p, spec, g, c);
  State s = kpp_subsolution(p, spec, g, 1e-3, 10.0);
  const State s0 = s;
  for (int n = 0; n < 10; ++n) {
    const State next = st.advance(s);
    for (Eigen::Index k = 0; k < s.w.size(); ++k)
      if (s0.w[k] > 0.0) {
        ASSERT_GE(next.w[k], s.w[k]) << "step " << n << " node " << k;
      }
    s = next;
  }
}

TEST(RoadFront, Interpolation) {
  ModelParams p;
  const auto g = tile_window(build_grid(p, 4, 4), 4);
  State s = State::zero(g);
  for (std::size_t i = 4; i <= 8; ++i) s.u(i) = 1.0;
  s.u(9) = 0.5;
  s.u(3) = 0.25;
  EXPECT_NEAR(road_front(s, g.dx, 0.75, true), 8.5 * g.dx, 1e-15);
  EXPECT_NEAR(road_front(s, g.dx, 0.5, false), (4.0 - 2.0 / 3.0) * g.dx, 1e-15);
  EXPECT_TRUE(std::isnan(road_front(State::zero(g), g.dx, 0.1, true)));
}
