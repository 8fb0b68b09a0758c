#pragma once

// Nontrivial steady state (U_R, V_R) by monotone time integration from above and below.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <string>

#include "fieldroad/errors.hpp"
#include "fieldroad/grid.hpp"
#include "fieldroad/model.hpp"
#include "fieldroad/simulate.hpp"
#include "fieldroad/spectral.hpp"

namespace fieldroad {

struct PersistenceCheck {
  bool holds = false;
  double margin = 0.0;  ///< m - d pi^2 / (4 R^2)
};

inline PersistenceCheck persistence_check(const ModelParams& params, const ReactionSpec& spec) {
  const double margin = spec.m() - params.d * std::numbers::pi * std::numbers::pi / (4.0 * params.R * params.R);
  return {margin > 0.0, margin};
}

struct SteadyOptions {
  double dt = -1.0;  ///< < 0 means 0.5/M, the largest admissible IMEX step
  std::size_t max_steps = 200000;
  double center = -1.0;  ///< subsolution centre; < 0 means L/2
};

enum class LowerStart { Subsolution, Eigenfunction, None };

struct SteadyState {
  StripGrid grid;
  Vector U;  ///< road profile, nx values over one period
  Vector V;  ///< field profile, row-major (j outer), rows j < ny
  bool persistent = false;
  double residual = 0.0;     ///< sup norm of A w - f(w)
  double bracket_gap = 0.0;  ///< sup |upper - lower| at exit
  double upper_increment = 0.0;
  double lower_increment = 0.0;
  std::size_t steps = 0;
  double epsilon = 0.0;  ///< scale of the lower start
  LowerStart lower_start = LowerStart::None;
  double lambda0 = 0.0;  ///< lambda_R(0) on the same grid
  PersistenceCheck persistence;

  double v(std::size_t i, std::size_t j) const {
    return j >= grid.ny ? 0.0 : V[static_cast<Eigen::Index>(j * grid.nx + i)];
  }

  State to_state(double t = 0.0) const {
    State s = State::zero(grid, t);
    s.w.head(static_cast<Eigen::Index>(grid.nx)) = U;
    s.w.tail(static_cast<Eigen::Index>(grid.nx * grid.ny)) = V;
    return s;
  }
};

/// Sup norm of the stationary equations A w - f(w) on `grid`.
inline double stationary_residual(const ModelParams& params, const ReactionSpec& spec, const StripGrid& grid,
                                  const Vector& w) {
  const auto lin = assemble_evolution_operator(params, spec, grid).matrix;
  Vector r = lin * w;
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const auto k = static_cast<Eigen::Index>(grid.field(i, j));
      r[k] -= spec.raw(grid.x(i), w[k]);
    }
  return r.cwiseAbs().maxCoeff();
}

namespace detail {

inline bool increases(const Stepper& st, const State& s) {
  const State n = st.advance(s);
  const double slack = 1e-14;
  return ((n.w - s.w).array() >= -slack).all();
}

}  // namespace detail

/// Periodic steady state on the one-period grid `grid`.
///
/// The upper run starts at (nu/mu, 1); the lower run at eps times the
/// compactly supported subsolution (tiled) when m > d pi^2/(4R^2), otherwise at
/// eps times the principal eigenfunction when lambda_R(0) < 0. eps is the
/// largest power of two for which one step increases the state pointwise.
/// Stops when both runs have increments <= tol and their gap is < 10 tol.
inline SteadyState compute_steady(const ModelParams& params, const ReactionSpec& spec, const StripGrid& grid,
                                  double tol, const SteadyOptions& opt = {}) {
  if (!(tol > 0.0)) throw ConfigError("steady tol must be > 0");
  if (!grid.periodic()) throw ConfigError("compute_steady needs a one-period periodic grid");
  params.validate();

  SteadyState out;
  out.grid = grid;
  out.persistence = persistence_check(params, spec);
  const auto nx = static_cast<Eigen::Index>(grid.nx);
  const auto nf = static_cast<Eigen::Index>(grid.nx * grid.ny);
  out.U = Vector::Zero(nx);
  out.V = Vector::Zero(nf);

  const EigenPair eig = principal_eigen(params, spec, grid, 0.0);
  out.lambda0 = eig.lambda;

  SimConfig c;
  c.dt = opt.dt > 0.0 ? opt.dt : 0.5 / spec.M();
  c.scheme = Scheme::IMEX_BE;
  const Stepper st(params, spec, grid, c);

  State lower = State::zero(grid);
  if (out.persistence.holds) {
    const double center = opt.center >= 0.0 ? opt.center : 0.5 * grid.L;
    const auto shape = subsolution_shape(params, spec);
    double eps = std::min(params.road_capacity(), shape.denominator / params.mu);
    eps = std::exp2(std::floor(std::log2(eps)));
    for (int k = 0; k < 60; ++k, eps *= 0.5) {
      const State s = kpp_subsolution(params, spec, grid, eps, center);
      if (detail::increases(st, s)) {
        lower = s;
        out.epsilon = eps;
        out.lower_start = LowerStart::Subsolution;
        break;
      }
    }
  }
  if (out.lower_start == LowerStart::None && eig.lambda < 0.0) {
    Vector phi(eig.p.size() + eig.q.size());
    phi << eig.p, eig.q;
    const double scale = std::min(params.road_capacity() / phi.head(nx).maxCoeff(), 1.0 / phi.tail(nf).maxCoeff());
    double eps = std::exp2(std::floor(std::log2(scale)));
    for (int k = 0; k < 60; ++k, eps *= 0.5) {
      State s = State::zero(grid);
      s.w = eps * phi;
      if (detail::increases(st, s)) {
        lower = s;
        out.epsilon = eps;
        out.lower_start = LowerStart::Eigenfunction;
        break;
      }
    }
  }
  if (out.lower_start == LowerStart::None) {
    // Extinction regime: only the zero state is returned.
    out.persistent = false;
    out.residual = 0.0;
    return out;
  }
  out.persistent = true;

  State upper = State::zero(grid);
  upper.w.head(nx).setConstant(params.road_capacity());
  upper.w.tail(nf).setConstant(1.0);

  for (std::size_t n = 1; n <= opt.max_steps; ++n) {
    const State up = st.advance(upper);
    const State lo = st.advance(lower);
    out.upper_increment = (up.w - upper.w).cwiseAbs().maxCoeff();
    out.lower_increment = (lo.w - lower.w).cwiseAbs().maxCoeff();
    upper = up;
    lower = lo;
    out.bracket_gap = (upper.w - lower.w).cwiseAbs().maxCoeff();
    out.steps = n;
    if (out.upper_increment <= tol && out.lower_increment <= tol && out.bracket_gap < 10.0 * tol) {
      const Vector w = 0.5 * (upper.w + lower.w);
      out.U = w.head(nx);
      out.V = w.tail(nf);
      out.residual = stationary_residual(params, spec, grid, w);
      return out;
    }
  }
  std::ostringstream os;
  os << "steady bracket did not close in " << opt.max_steps << " steps (gap " << out.bracket_gap << ")";
  throw ConvergenceError(os.str());
}

/// Copies a one-period steady state onto a tiled window grid.
inline State tile_steady(const SteadyState& s, const StripGrid& window) {
  if (window.nx_period != s.grid.nx || window.ny != s.grid.ny)
    throw ConfigError("tile_steady: window grid does not match the steady grid");
  State out = State::zero(window);
  const std::size_t np = s.grid.nx;
  for (std::size_t i = 0; i < window.nx; ++i) {
    const std::size_t ip = i % np;
    out.u(i) = s.U[static_cast<Eigen::Index>(ip)];
    for (std::size_t j = 0; j < window.ny; ++j) out.v(i, j) = s.v(ip, j);
  }
  return out;
}

}  // namespace fieldroad
