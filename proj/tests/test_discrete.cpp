#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <sstream>

#include "fieldroad/discrete.hpp"
#include "fieldroad/spectral.hpp"

using namespace fieldroad;

namespace {

Eigen::MatrixXd dense(const DiscreteOperator& op) { return Eigen::MatrixXd(op.matrix); }

ModelParams params(double R = 2.0) {
  ModelParams p;
  p.D = 1.5;
  p.d = 0.7;
  p.mu = 1.3;
  p.nu = 0.8;
  p.R = R;
  return p;
}

}  // namespace

TEST(EigenOperator, FieldInteriorStencilAtAlphaZero) {
  const auto p = params();
  const auto spec = ReactionSpec::logistic(1.2);
  const auto g = build_grid(p, 8, 10);
  const auto A = dense(assemble_eigen_operator(p, spec, g, 0.0));
  const std::size_t i = 3, j = 4, r = g.field(i, j);
  const double hx2 = g.dx * g.dx, hy2 = g.dy * g.dy;
  EXPECT_NEAR(A(r, r), 2 * p.d / hx2 + 2 * p.d / hy2 - 1.2, 1e-12);
  EXPECT_NEAR(A(r, g.field(i - 1, j)), -p.d / hx2, 1e-12);
  EXPECT_NEAR(A(r, g.field(i + 1, j)), -p.d / hx2, 1e-12);
  EXPECT_NEAR(A(r, g.field(i, j - 1)), -p.d / hy2, 1e-12);
  EXPECT_NEAR(A(r, g.field(i, j + 1)), -p.d / hy2, 1e-12);
  EXPECT_EQ(A.row(r).cwiseAbs().cwiseSign().sum(), 5.0);
}

TEST(EigenOperator, RobinRowAndRoadRow) {
  const auto p = params();
  const auto spec = ReactionSpec::logistic(1.0);
  const auto g = build_grid(p, 8, 10);
  const auto A = dense(assemble_eigen_operator(p, spec, g, 0.0));
  const std::size_t i = 0;
  const std::size_t r = g.field(i, 0);
  const double hx2 = g.dx * g.dx, hy2 = g.dy * g.dy;
  EXPECT_NEAR(A(r, r), 2 * p.d / hx2 + 2 * p.d / hy2 + 2 * p.nu / g.dy - 1.0, 1e-12);
  EXPECT_NEAR(A(r, g.field(i, 1)), -2 * p.d / hy2, 1e-12);
  EXPECT_NEAR(A(r, g.road(i)), -2 * p.mu / g.dy, 1e-12);
  EXPECT_NEAR(A(r, g.field(g.nx - 1, 0)), -p.d / hx2, 1e-12);  // periodic wrap
  const std::size_t q = g.road(i);
  EXPECT_NEAR(A(q, q), 2 * p.D / hx2 + p.mu, 1e-12);
  EXPECT_NEAR(A(q, g.field(i, 0)), -p.nu, 1e-12);
  EXPECT_NEAR(A(q, g.road(g.nx - 1)), -p.D / hx2, 1e-12);
}

TEST(EigenOperator, AlphaOddEntries) {
  const auto p = params();
  const auto spec = ReactionSpec::logistic(1.0, {0.5});
  const auto g = build_grid(p, 8, 6);
  const double a = 0.7;
  const auto plus = assemble_eigen_operator(p, spec, g, a);
  const auto minus = assemble_eigen_operator(p, spec, g, -a);
  ASSERT_EQ(plus.advection, AdvectionScheme::Centered);
  const Eigen::MatrixXd P = dense(plus), M = dense(minus);
  const Eigen::MatrixXd odd = 0.5 * (P - M);
  // Odd part: exactly the centered advection couplings +-k alpha / dx in x.
  for (std::size_t r = 0; r < g.dim(); ++r) {
    const bool road = r < g.nx;
    const double k = road ? p.D : p.d;
    const std::size_t i = road ? r : (r - g.nx) % g.nx;
    const std::size_t base = r - i;
    for (std::size_t c = 0; c < g.dim(); ++c) {
      double expect = 0.0;
      if (c == base + (i + 1) % g.nx) expect = k * a / g.dx;
      if (c == base + (i + g.nx - 1) % g.nx) expect = -k * a / g.dx;
      EXPECT_NEAR(odd(r, c), expect, 1e-12) << r << "," << c;
    }
  }
  const Eigen::MatrixXd even = 0.5 * (P + M);
  EXPECT_NEAR((even - dense(assemble_eigen_operator(p, spec, g, 0.0))).diagonal().maxCoeff(),
              -std::min(p.D, p.d) * a * a, 1e-12);
}

TEST(EigenOperator, MMatrixSignPattern) {
  const auto p = params();
  const auto spec = ReactionSpec::logistic(1.0, {0.5});
  const auto g = build_grid(p, 16, 8);
  for (double a : {0.0, 0.5, -3.0, 8.0, -8.0, 20.0}) {
    const auto op = assemble_eigen_operator(p, spec, g, a);
    EXPECT_EQ(op.advection, peclet_ok(a, g.dx) ? AdvectionScheme::Centered : AdvectionScheme::Upwind);
    const auto sh = op.shifted(shift_bound(p, spec, a));
    ASSERT_TRUE(sh.shift_applied.has_value());
    for (const auto& e : sh.entries()) {
      if (e.row == e.col)
        EXPECT_GT(e.value, 0.0) << "alpha=" << a;
      else
        EXPECT_LE(e.value, 0.0) << "alpha=" << a;
    }
  }
}

TEST(EigenOperator, UpwindBeyondPeclet) {
  const auto p = params();
  const auto g = build_grid(p, 4, 4);
  EXPECT_EQ(assemble_eigen_operator(p, ReactionSpec::logistic(1.0), g, 2.0).advection, AdvectionScheme::Centered);
  EXPECT_EQ(assemble_eigen_operator(p, ReactionSpec::logistic(1.0), g, 2.5).advection, AdvectionScheme::Upwind);
}

TEST(EigenOperator, TinyDenseSpectrum) {
  const auto p = params(1.5);
  const auto spec = ReactionSpec::logistic(1.0, {0.5});
  const auto g = build_grid(p, 4, 4);
  const Eigen::MatrixXd A = dense(assemble_eigen_operator(p, spec, g, 0.3));
  ASSERT_EQ(A.rows(), 20);
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  const auto ev = es.eigenvalues();
  Eigen::Index k0 = 0;
  for (Eigen::Index k = 1; k < ev.size(); ++k)
    if (ev[k].real() < ev[k0].real()) k0 = k;
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (k != k0) {
      EXPECT_GT(ev[k].real(), ev[k0].real() + 1e-6);
    }
  EXPECT_NEAR(ev[k0].imag(), 0.0, 1e-12);
  Eigen::VectorXd x = es.eigenvectors().col(k0).real();
  if (x.sum() < 0) x = -x;
  EXPECT_GT(x.minCoeff(), 0.0);
}

TEST(EvolutionOperator, MatchesEigenOperatorWithoutReaction) {
  const auto p = params();
  const auto spec = ReactionSpec::logistic(1.0, {0.5});
  const auto g = build_grid(p, 8, 6);
  const Eigen::MatrixXd E = dense(assemble_evolution_operator(p, spec, g));
  Eigen::MatrixXd A = dense(assemble_eigen_operator(p, spec, g, 0.0));
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) A(g.field(i, j), g.field(i, j)) += fv0(spec, g.x(i));
  EXPECT_NEAR((A - E).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(EvolutionOperator, InteriorRowSumsVanish) {
  const auto p = params();
  const auto g = build_grid(p, 8, 6);
  const Eigen::MatrixXd E = dense(assemble_evolution_operator(p, ReactionSpec::logistic(1.0), g));
  for (std::size_t j = 1; j + 1 < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) EXPECT_NEAR(E.row(g.field(i, j)).sum(), 0.0, 1e-10);
}

TEST(EvolutionOperator, RoadRowExchange) {
  const auto p = params();
  const auto g = build_grid(p, 8, 6);
  const Eigen::MatrixXd E = dense(assemble_evolution_operator(p, ReactionSpec::logistic(1.0), g));
  for (std::size_t i = 0; i < g.nx; ++i) {
    EXPECT_NEAR(E(g.road(i), g.road(i)) - 2 * p.D / (g.dx * g.dx), p.mu, 1e-12);
    EXPECT_NEAR(E(g.road(i), g.field(i, 0)), -p.nu, 1e-12);
  }
}

TEST(EvolutionOperator, CapacityPairStationaryAwayFromCap) {
  const auto p = params();
  for (bool window : {false, true}) {
    auto g = build_grid(p, 8, 6);
    if (window) g = tile_window(g, 3);
    const auto E = assemble_evolution_operator(p, ReactionSpec::logistic(1.0), g).matrix;
    Eigen::VectorXd w(g.dim());
    w.head(g.nx).setConstant(p.nu / p.mu);
    w.tail(g.nx * g.ny).setConstant(1.0);
    const Eigen::VectorXd r = E * w;
    for (std::size_t k = 0; k < g.dim(); ++k) {
      const bool touches_cap = k >= g.field(0, g.ny - 1);
      if (touches_cap)
        EXPECT_GT(r[k], 0.0);
      else
        EXPECT_NEAR(r[k], 0.0, 1e-10);
    }
  }
}

TEST(EvolutionOperator, FieldBlockSymmetricOnInterior) {
  const auto p = params();
  const auto g = build_grid(p, 8, 6);
  const Eigen::MatrixXd E = dense(assemble_evolution_operator(p, ReactionSpec::logistic(1.0), g));
  const auto n = static_cast<Eigen::Index>(g.nx * (g.ny - 1));
  const Eigen::MatrixXd F = E.block(g.field(0, 1), g.field(0, 1), n, n);
  EXPECT_NEAR((F - F.transpose()).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(EvolutionOperator, TwistOnWindowRejected) {
  const auto p = params();
  const auto w = tile_window(build_grid(p, 8, 6), 3);
  EXPECT_THROW(assemble_eigen_operator(p, ReactionSpec::logistic(1.0), w, 0.5), ConfigError);
}

TEST(EigenOperator, PeriodMismatchRejected) {
  auto p = params();
  p.L = 2.0;
  EXPECT_THROW(assemble_eigen_operator(p, ReactionSpec::logistic(1.0), build_grid(p, 8, 6), 0.0), ConfigError);
}

TEST(EigenOperator, SecondOrderRefinement) {
  const auto p = params(2.0);
  const auto spec = ReactionSpec::logistic(1.0, {0.5});
  std::vector<double> lam;
  for (long n : {8, 16, 32}) lam.push_back(principal_eigen(p, spec, build_grid(p, n, n), 0.5).lambda);
  const double ratio = (lam[2] - lam[1]) / (lam[1] - lam[0]);
  EXPECT_NEAR(ratio, 0.25, 0.05) << lam[0] << " " << lam[1] << " " << lam[2];
}

TEST(Coo, RoundTrip) {
  const auto p = params();
  const auto op = assemble_eigen_operator(p, ReactionSpec::logistic(1.0, {0.5}), build_grid(p, 4, 4), 0.3);
  std::ostringstream os;
  write_coo(os, op);
  std::istringstream in(os.str());
  std::size_t r, c, count = 0;
  double v;
  const Eigen::MatrixXd A = dense(op);
  while (in >> r >> c >> v) {
    EXPECT_EQ(v, A(r, c));
    ++count;
  }
  EXPECT_EQ(count, op.entries().size());
  EXPECT_EQ(count, static_cast<std::size_t>((A.array() != 0.0).count()));
}
