#pragma once

// Monotone time stepping of the truncated field-road system.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fieldroad/discrete.hpp"
#include "fieldroad/errors.hpp"
#include "fieldroad/grid.hpp"
#include "fieldroad/model.hpp"

namespace fieldroad {

using Vector = Eigen::VectorXd;

/// Road density u (nx nodes) and field density v (nx by ny, row ny is the cap)
/// packed in the unknown ordering of StripGrid.
struct State {
  double t = 0.0;
  Vector w;
  std::size_t nx = 0;
  std::size_t ny = 0;

  static State zero(const StripGrid& g, double t = 0.0) {
    return State{t, Vector::Zero(static_cast<Eigen::Index>(g.dim())), g.nx, g.ny};
  }

  auto u() const { return w.head(static_cast<Eigen::Index>(nx)); }
  auto u() { return w.head(static_cast<Eigen::Index>(nx)); }
  auto v_flat() const { return w.tail(static_cast<Eigen::Index>(nx * ny)); }
  double u(std::size_t i) const { return w[static_cast<Eigen::Index>(i)]; }
  double v(std::size_t i, std::size_t j) const {
    return j >= ny ? 0.0 : w[static_cast<Eigen::Index>(nx + j * nx + i)];
  }
  double& v(std::size_t i, std::size_t j) { return w[static_cast<Eigen::Index>(nx + j * nx + i)]; }
  double& u(std::size_t i) { return w[static_cast<Eigen::Index>(i)]; }
};

enum class Scheme { IMEX_BE, Explicit };

struct SimConfig {
  double dt = 0.05;
  double T = 10.0;
  Scheme scheme = Scheme::IMEX_BE;
  std::size_t record_every = 10;
  std::size_t domain_copies = 1;
  double record_from = 0.0;     ///< snapshots before this time are skipped (initial one is always kept)
  double guard_level = -1.0;    ///< road density that must not reach the guard band; < 0 means 0.1 nu/mu
  double guard_periods = 5.0;   ///< width of the guard band at each Neumann end, in periods
};

/// Largest dt admitted by the explicit scheme on `grid`.
/// The exchange terms enter the diagonal too, so the bound is the smaller of
/// 1/(2 max(D,d)(1/dx^2 + 1/dy^2) + M) and 1/(max diagonal + M).
inline double explicit_dt_max(const ModelParams& p, const ReactionSpec& spec, const StripGrid& g) {
  const double M = spec.M();
  const double cfl = 1.0 / (2.0 * std::max(p.D, p.d) * (1.0 / (g.dx * g.dx) + 1.0 / (g.dy * g.dy)) + M);
  const double diag = std::max(2.0 * p.D / (g.dx * g.dx) + p.mu,
                               2.0 * p.d / (g.dx * g.dx) + 2.0 * p.d / (g.dy * g.dy) + 2.0 * p.nu / g.dy);
  return std::min(cfl, 1.0 / (diag + M));
}

inline void validate(const SimConfig& c, const ModelParams& p, const ReactionSpec& spec, const StripGrid& g) {
  if (!(c.dt > 0.0)) throw ConfigError("sim.dt must be > 0");
  if (!(c.T >= 0.0)) throw ConfigError("sim.T must be >= 0");
  if (c.record_every == 0) throw ConfigError("sim.record_every must be >= 1");
  if (c.scheme == Scheme::IMEX_BE) {
    const double bound = 0.5 / spec.M();
    if (c.dt > bound * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "sim.dt must be <= 0.5/M = " << bound << " for IMEX_BE";
      throw ConfigError(os.str());
    }
  } else {
    const double bound = explicit_dt_max(p, spec, g);
    if (c.dt > bound) {
      std::ostringstream os;
      os << "sim.dt must be <= " << bound << " for the explicit scheme";
      throw ConfigError(os.str());
    }
  }
}

/// One-step propagator for a fixed (grid, dt). The IMEX factorization of
/// I + dt A_lin is computed once at construction.
class Stepper {
 public:
  Stepper(const ModelParams& params, const ReactionSpec& spec, const StripGrid& grid, const SimConfig& config)
      : params_(params), spec_(spec), grid_(grid), config_(config) {
    params.validate();
    validate(config, params, spec, grid);
    lin_ = assemble_evolution_operator(params, spec, grid).matrix;
    if (spec.is_logistic()) {
      coef_.resize(grid.nx);
      for (std::size_t i = 0; i < grid.nx; ++i) coef_[i] = spec.linearization(grid.x(i));
    }
    if (config.scheme == Scheme::IMEX_BE) {
      SparseMatrix sys(lin_.rows(), lin_.cols());
      sys.setIdentity();
      sys += config.dt * lin_;
      sys.makeCompressed();
      lu_ = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
      lu_->compute(sys);
      if (lu_->info() != Eigen::Success)
        throw NumericalError("IMEX factorization failed: " + lu_->lastErrorMessage());
    }
  }

  const StripGrid& grid() const { return grid_; }
  const SimConfig& config() const { return config_; }
  const SparseMatrix& linear_part() const { return lin_; }

  /// dt * f on field rows, zero on road rows.
  Vector reaction(const Vector& w) const {
    Vector r = Vector::Zero(w.size());
    const std::size_t nx = grid_.nx;
    for (std::size_t j = 0; j < grid_.ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        const auto k = static_cast<Eigen::Index>(grid_.field(i, j));
        const double v = w[k];
        r[k] = coef_.empty() ? spec_.raw(grid_.x(i), v) : coef_[i] * v * (1.0 - v);
      }
    }
    return r;
  }

  State advance(const State& s) const {
    Vector rhs = s.w + config_.dt * reaction(s.w);
    State out{s.t + config_.dt, {}, s.nx, s.ny};
    if (config_.scheme == Scheme::IMEX_BE) {
      out.w = lu_->solve(rhs);
      if (lu_->info() != Eigen::Success) throw NumericalError("IMEX solve failed at t=" + std::to_string(s.t));
    } else {
      out.w = rhs - config_.dt * (lin_ * s.w);
    }
    if (!out.w.allFinite()) throw NumericalError("non-finite state at t=" + std::to_string(out.t));
    return out;
  }

 private:
  ModelParams params_;
  ReactionSpec spec_;
  StripGrid grid_;
  SimConfig config_;
  SparseMatrix lin_;
  std::vector<double> coef_;
  std::shared_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
};

/// Single step; builds a throw-away Stepper. Prefer Stepper for repeated steps.
inline State step(const State& state, const ModelParams& params, const ReactionSpec& spec, const StripGrid& grid,
                  const SimConfig& config) {
  return Stepper(params, spec, grid, config).advance(state);
}

struct Probe {
  std::string name;
  std::function<double(const State&)> fn;
};

struct ProbeSample {
  double t;
  std::string name;
  double value;
};

struct Trajectory {
  std::vector<State> snapshots;
  std::vector<ProbeSample> probes;
};

/// Outermost road position where u crosses `level`, by linear interpolation
/// between nodes; NaN when u < level everywhere.
inline double road_front(const State& s, double dx, double level, bool rightmost) {
  const auto n = static_cast<std::ptrdiff_t>(s.nx);
  if (rightmost) {
    for (std::ptrdiff_t i = n - 1; i >= 0; --i) {
      const double ui = s.u(static_cast<std::size_t>(i));
      if (ui >= level) {
        if (i + 1 >= n) return static_cast<double>(i) * dx;
        const double un = s.u(static_cast<std::size_t>(i + 1));
        return (static_cast<double>(i) + (ui - level) / (ui - un)) * dx;
      }
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const double ui = s.u(static_cast<std::size_t>(i));
      if (ui >= level) {
        if (i == 0) return 0.0;
        const double up = s.u(static_cast<std::size_t>(i - 1));
        return (static_cast<double>(i) - (ui - level) / (ui - up)) * dx;
      }
    }
  }
  return std::nan("");
}

inline Probe sup_norm_probe() {
  return {"sup_norm", [](const State& s) { return s.w.cwiseAbs().maxCoeff(); }};
}

inline Probe front_probe(const StripGrid& g, double level, bool rightmost) {
  return {rightmost ? "pos_right" : "pos_left",
          [dx = g.dx, level, rightmost](const State& s) { return road_front(s, dx, level, rightmost); }};
}

inline void check_guard(const State& s, const ModelParams& p, const StripGrid& g, const SimConfig& c) {
  if (g.periodic() || c.guard_periods <= 0.0) return;
  const double level = c.guard_level < 0.0 ? 0.1 * p.road_capacity() : c.guard_level;
  const auto band = static_cast<std::size_t>(std::ceil(c.guard_periods * static_cast<double>(g.nx_period)));
  const std::size_t n = std::min(band, g.nx);
  for (std::size_t k = 0; k < n; ++k) {
    if (s.u(k) >= level || s.u(g.nx - 1 - k) >= level) {
      std::ostringstream os;
      os << "front reached the window guard band at t=" << s.t << "; increase sim.domain_copies";
      throw NumericalError(os.str());
    }
  }
}

/// Runs step() until t >= T. Snapshots every record_every steps (from
/// record_from on, plus the initial state); probes every step.
inline Trajectory simulate(const State& init, const Stepper& stepper, const ModelParams& params,
                           const std::vector<Probe>& probes = {}) {
  const SimConfig& c = stepper.config();
  Trajectory traj;
  auto record_probes = [&](const State& s) {
    for (const auto& p : probes) traj.probes.push_back({s.t, p.name, p.fn(s)});
  };
  traj.snapshots.push_back(init);
  record_probes(init);
  const auto steps = static_cast<std::size_t>(std::ceil(c.T / c.dt - 1e-9));
  State s = init;
  for (std::size_t n = 1; n <= steps; ++n) {
    s = stepper.advance(s);
    s.t = init.t + static_cast<double>(n) * c.dt;
    check_guard(s, params, stepper.grid(), c);
    record_probes(s);
    if (n % c.record_every == 0 && s.t >= c.record_from - 1e-12) traj.snapshots.push_back(s);
  }
  return traj;
}

inline Trajectory simulate(const State& init, const ModelParams& params, const ReactionSpec& spec,
                           const StripGrid& grid, const SimConfig& config, const std::vector<Probe>& probes = {}) {
  return simulate(init, Stepper(params, spec, grid, config), params, probes);
}

/// Smooth compactly supported bump with cosine taper:
///   u = amp_u phi(x),  v = amp_v phi(x) phi_y(y),  phi(x) = (1 + cos(pi (x - c)/w))/2 on |x - c| < w,
/// and phi_y the same taper in y over min(w, R).
inline State bump_init(const ModelParams& params, const StripGrid& grid, double center, double width,
                       double amplitude_u, double amplitude_v) {
  if (!(width > 0.0)) throw ConfigError("bump width must be > 0");
  if (amplitude_u < 0.0 || amplitude_v < 0.0) throw ConfigError("bump amplitudes must be >= 0");
  if (amplitude_u > params.road_capacity() || amplitude_v > 1.0)
    throw ConfigError("bump amplitudes must not exceed the carrying capacity (nu/mu, 1)");
  auto taper = [](double s, double w) {
    return std::abs(s) < w ? 0.5 * (1.0 + std::cos(std::numbers::pi * s / w)) : 0.0;
  };
  const double wy = std::min(width, grid.R);
  State s = State::zero(grid);
  for (std::size_t i = 0; i < grid.nx; ++i) {
    const double px = taper(grid.x(i) - center, width);
    s.u(i) = amplitude_u * px;
    for (std::size_t j = 0; j < grid.ny; ++j) s.v(i, j) = amplitude_v * px * taper(grid.y(j), wy);
  }
  return s;
}

/// Parameters of the compactly supported subsolution
///   eps cos(omega (x - c)) (1, mu sin(beta (R - y)) / (d beta cos(beta R) + nu sin(beta R))).
struct SubsolutionShape {
  double delta;
  double beta;
  double omega;
  double kappa;
  double denominator;  ///< d beta cos(beta R) + nu sin(beta R)
};

/// Chooses delta, beta in (pi/2R, pi/R) with d beta^2 < m - delta and a positive
/// denominator, then omega^2 = kappa. Throws DomainError when m <= d pi^2 / (4 R^2).
inline SubsolutionShape subsolution_shape(const ModelParams& p, const ReactionSpec& spec) {
  const double m = spec.m();
  const double base = std::numbers::pi / (2.0 * p.R);
  const double threshold = p.d * base * base;
  if (!(m > threshold))
    throw DomainError("persistence condition m > d pi^2/(4R^2) fails; no subsolution exists");
  const double delta = std::min(m / 10.0, 0.5 * (m - threshold));
  const double beta_max = std::sqrt((m - delta) / p.d);
  double beta = std::min({1.05 * base, 0.5 * (base + beta_max), 1.5 * base});
  auto denom = [&](double b) { return p.d * b * std::cos(b * p.R) + p.nu * std::sin(b * p.R); };
  while (!(denom(beta) > 0.0)) beta = 0.5 * (beta + base);
  const double den = denom(beta);
  const double road = -p.mu * p.d * beta * std::cos(beta * p.R) / (p.D * den);
  const double field = (m - delta) / p.d - beta * beta;
  const double kappa = std::min(road, field);
  if (!(kappa > 0.0)) throw DomainError("subsolution construction failed: kappa <= 0");
  return {delta, beta, std::sqrt(kappa), kappa, den};
}

/// Subsolution centred at `center`, scaled by epsilon. On a periodic grid the
/// bump is tiled (pointwise max over translates by multiples of L).
inline State kpp_subsolution(const ModelParams& params, const ReactionSpec& spec, const StripGrid& grid,
                             double epsilon, double center) {
  const auto shape = subsolution_shape(params, spec);
  if (!(epsilon > 0.0)) throw ConfigError("subsolution epsilon must be > 0");
  const double field_amp = params.mu / shape.denominator;
  if (epsilon > params.road_capacity() || epsilon * field_amp > 1.0)
    throw ConfigError("subsolution epsilon too large: exceeds the carrying capacity");
  const double half = std::numbers::pi / (2.0 * shape.omega);
  auto profile = [&](double x) {
    if (!grid.periodic()) {
      const double s = x - center;
      return std::abs(s) < half ? std::cos(shape.omega * s) : 0.0;
    }
    double best = 0.0;
    const double L = grid.L;
    const double base = x - center;
    const auto kmax = static_cast<long>(std::ceil(half / L)) + 1;
    for (long k = -kmax; k <= kmax; ++k) {
      const double s = base - static_cast<double>(k) * L;
      if (std::abs(s) < half) best = std::max(best, std::cos(shape.omega * s));
    }
    return best;
  };
  State s = State::zero(grid);
  for (std::size_t i = 0; i < grid.nx; ++i) {
    const double px = epsilon * profile(grid.x(i));
    s.u(i) = px;
    for (std::size_t j = 0; j < grid.ny; ++j)
      s.v(i, j) = px * field_amp * std::sin(shape.beta * (params.R - grid.y(j)));
  }
  return s;
}

}  // namespace fieldroad
