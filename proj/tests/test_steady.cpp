#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fieldroad/steady.hpp"

using namespace fieldroad;

namespace {

constexpr double kPi = std::numbers::pi;

double sup_dev_from_one(const SteadyState& s, double y_max) {
  double dev = (s.U.array() - 1.0).abs().maxCoeff();
  for (std::size_t j = 0; j < s.grid.ny && s.grid.y(j) <= y_max + 1e-12; ++j)
    for (std::size_t i = 0; i < s.grid.nx; ++i) dev = std::max(dev, std::abs(s.v(i, j) - 1.0));
  return dev;
}

}  // namespace

TEST(Persistence, ClosedFormMargin) {
  ModelParams p;
  p.R = kPi / 2.0;
  auto c = persistence_check(p, ReactionSpec::logistic(1.0));
  EXPECT_FALSE(c.holds);
  EXPECT_NEAR(c.margin, 0.0, 1e-15);

  p.R = kPi;
  c = persistence_check(p, ReactionSpec::logistic(1.0));
  EXPECT_TRUE(c.holds);
  EXPECT_NEAR(c.margin, 0.75, 1e-15);

  p.d = 2.0;
  p.R = 10.0;
  c = persistence_check(p, ReactionSpec::logistic(0.5));
  EXPECT_TRUE(c.holds);
  EXPECT_NEAR(c.margin, 0.5 - 2.0 * kPi * kPi / 400.0, 1e-15);
  EXPECT_NEAR(c.margin, 0.4507, 1e-4);
}

TEST(Steady, WideStripNearCapacity) {
  ModelParams p;
  p.R = 20.0;
  const auto s = compute_steady(p, ReactionSpec::logistic(1.0), build_grid_dy(p, 8, 0.1), 1e-8);
  ASSERT_TRUE(s.persistent);
  EXPECT_LT(sup_dev_from_one(s, 10.0), 2e-2);
  EXPECT_LE(s.bracket_gap, 1e-7);
  EXPECT_EQ(s.lower_start, LowerStart::Subsolution);
}

TEST(Steady, IncreasesWithWidth) {
  ModelParams p;
  const auto spec = ReactionSpec::logistic(1.0);
  p.R = 5.0;
  const auto s5 = compute_steady(p, spec, build_grid_dy(p, 8, 0.1), 1e-9);
  p.R = 10.0;
  const auto s10 = compute_steady(p, spec, build_grid_dy(p, 8, 0.1), 1e-9);
  EXPECT_LT(s5.U.maxCoeff(), s10.U.minCoeff());
  // Compare field at common heights.
  for (std::size_t j = 0; j < s5.grid.ny; j += 5) EXPECT_LT(s5.v(0, j), s10.v(0, j));
}

TEST(Steady, NarrowStripIsExtinct) {
  ModelParams p;
  p.R = 1.0;
  const auto s = compute_steady(p, ReactionSpec::logistic(1.0), build_grid(p, 8, 16), 1e-9);
  EXPECT_FALSE(s.persistent);
  EXPECT_FALSE(s.persistence.holds);
  EXPECT_GT(s.lambda0, 0.0);
  EXPECT_EQ(s.lower_start, LowerStart::None);
  EXPECT_EQ(s.U.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(s.V.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Steady, StrictBoundsAndStationary) {
  ModelParams p;
  p.R = 4.0;
  p.mu = 2.0;
  p.nu = 3.0;
  const auto spec = ReactionSpec::logistic(1.0);
  const auto g = build_grid_dy(p, 16, 0.1);
  const double tol = 1e-9;
  const auto s = compute_steady(p, spec, g, tol);
  ASSERT_TRUE(s.persistent);
  EXPECT_LT(s.lambda0, 0.0);
  EXPECT_GT(s.U.minCoeff(), 0.0);
  EXPECT_LT(s.U.maxCoeff(), p.road_capacity());
  EXPECT_GT(s.V.minCoeff(), 0.0);
  EXPECT_LT(s.V.maxCoeff(), 1.0);

  SimConfig c;
  c.dt = 0.5 / spec.M();
  const State w = s.to_state();
  const State n = step(w, p, spec, g, c);
  EXPECT_LE((n.w - w.w).cwiseAbs().maxCoeff(), 10.0 * tol);
}

TEST(Steady, HeterogeneousProfileVaries) {
  ModelParams p;
  p.R = 6.0;
  const auto spec = ReactionSpec::logistic(1.0, {0.5});
  const auto s = compute_steady(p, spec, build_grid_dy(p, 16, 0.1), 1e-10);
  ASSERT_TRUE(s.persistent);
  EXPECT_GT(s.U.maxCoeff() - s.U.minCoeff(), 1e-7);
  // Reflection x -> L - x maps a cosine coefficient to itself.
  for (std::size_t i = 1; i < 16; ++i)
    EXPECT_NEAR(s.U[static_cast<Eigen::Index>(i)], s.U[static_cast<Eigen::Index>(16 - i)], 1e-7);
}

TEST(Steady, TileOntoWindow) {
  ModelParams p;
  p.R = 4.0;
  const auto g = build_grid_dy(p, 8, 0.25);
  const auto s = compute_steady(p, ReactionSpec::logistic(1.0, {0.3}), g, 1e-9);
  const auto win = tile_window(g, 3);
  const State t = tile_steady(s, win);
  ASSERT_EQ(t.nx, 25u);
  for (std::size_t i = 0; i < win.nx; ++i) {
    EXPECT_EQ(t.u(i), s.U[static_cast<Eigen::Index>(i % 8)]);
    EXPECT_EQ(t.v(i, 3), s.v(i % 8, 3));
  }
  EXPECT_THROW(tile_steady(s, tile_window(build_grid_dy(p, 16, 0.25), 3)), ConfigError);
}

TEST(Steady, RejectsBadInput) {
  ModelParams p;
  p.R = 4.0;
  const auto g = build_grid_dy(p, 8, 0.25);
  EXPECT_THROW(compute_steady(p, ReactionSpec::logistic(1.0), g, 0.0), ConfigError);
  EXPECT_THROW(compute_steady(p, ReactionSpec::logistic(1.0), tile_window(g, 2), 1e-8), ConfigError);
}
