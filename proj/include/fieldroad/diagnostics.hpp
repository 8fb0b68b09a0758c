#pragma once

// Front positions, speed estimates, and the spreading / pulsating checks on simulated trajectories.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fieldroad/errors.hpp"
#include "fieldroad/grid.hpp"
#include "fieldroad/model.hpp"
#include "fieldroad/simulate.hpp"

namespace fieldroad {

struct LineFit {
  double speed = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double stderr_speed = 0.0;
  std::size_t samples = 0;
};

struct FrontTrace {
  std::vector<double> times;
  std::vector<double> pos_right;
  std::vector<double> pos_left;
  double level = 0.0;
  bool empty = true;
  std::optional<LineFit> fit_right;
  std::optional<LineFit> fit_left;
};

/// Least-squares line y = a + b t. r2 is 1 when y is constant.
inline LineFit fit_line(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  if (n < 2 || y.size() != n) throw DiagnosticsError("fit_line: need at least 2 matching samples");
  double tm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < n; ++k) tm += t[k], ym += y[k];
  tm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    stt += (t[k] - tm) * (t[k] - tm);
    sty += (t[k] - tm) * (y[k] - ym);
    syy += (y[k] - ym) * (y[k] - ym);
  }
  if (!(stt > 0.0)) throw DiagnosticsError("fit_line: sample times are all equal");
  LineFit f;
  f.samples = n;
  f.speed = sty / stt;
  f.intercept = ym - f.speed * tm;
  double ssr = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = y[k] - (f.intercept + f.speed * t[k]);
    ssr += r * r;
  }
  f.r2 = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  f.stderr_speed = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / stt) : 0.0;
  return f;
}

namespace detail {

inline std::optional<LineFit> trailing_fit(const std::vector<double>& t, const std::vector<double>& y,
                                           double window_fraction, std::size_t min_samples) {
  const auto n = t.size();
  const auto k = static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(n)));
  if (k < min_samples || k > n) return std::nullopt;
  const std::vector<double> tt(t.end() - static_cast<std::ptrdiff_t>(k), t.end());
  const std::vector<double> yy(y.end() - static_cast<std::ptrdiff_t>(k), y.end());
  return fit_line(tt, yy);
}

}  // namespace detail

/// Outermost road crossings of `level` per snapshot (linear interpolation
/// between nodes). Snapshots where u stays below level are skipped.
inline FrontTrace track_front(const Trajectory& traj, const StripGrid& grid, double level,
                              double window_fraction = 0.5) {
  if (!(level > 0.0)) throw ConfigError("front level must be > 0");
  FrontTrace tr;
  tr.level = level;
  for (const auto& s : traj.snapshots) {
    const double r = road_front(s, grid.dx, level, true);
    if (std::isnan(r)) continue;
    tr.times.push_back(s.t);
    tr.pos_right.push_back(r);
    tr.pos_left.push_back(road_front(s, grid.dx, level, false));
  }
  tr.empty = tr.times.empty();
  if (!tr.empty) {
    tr.fit_right = detail::trailing_fit(tr.times, tr.pos_right, window_fraction, 10);
    tr.fit_left = detail::trailing_fit(tr.times, tr.pos_left, window_fraction, 10);
  }
  return tr;
}

struct SpeedEstimate {
  double c_hat = 0.0;
  double stderr_c = 0.0;
  double r2 = 0.0;
  std::size_t samples = 0;
};

/// Least-squares slope of pos_right over the trailing window_fraction of samples.
inline SpeedEstimate estimate_speed(const FrontTrace& trace, double window_fraction = 0.5) {
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) throw ConfigError("window_fraction must be in (0, 1]");
  const auto fit = detail::trailing_fit(trace.times, trace.pos_right, window_fraction, 10);
  if (!fit) {
    std::ostringstream os;
    os << "estimate_speed: fewer than 10 samples in the trailing window (trace has " << trace.times.size() << ")";
    throw DiagnosticsError(os.str());
  }
  return {fit->speed, fit->stderr_speed, fit->r2, fit->samples};
}

struct DichotomyOptions {
  double factor_out = 1.2;
  double factor_in = 0.8;
  double threshold_out = 1e-3;
  double threshold_in = 5e-2;
  double origin = 0.0;  ///< x from which |x| c t is measured (centre of the initial data)
};

struct DichotomyReport {
  double t = 0.0;
  double outer_sup = 0.0;  ///< sup (u, v) over |x - origin| >= factor_out c t
  bool outer_pass = true;
  bool inner_applicable = false;
  double inner_sup = 0.0;  ///< sup |(u, v) - (U, V)| over |x - origin| <= factor_in c t
  bool inner_pass = true;
  bool pass() const { return outer_pass && (!inner_applicable || inner_pass); }
};

/// Both clauses are evaluated on the last snapshot. `steady` is the steady
/// state laid out on the same window grid (see tile_steady).
inline DichotomyReport dichotomy_check(const Trajectory& traj, const StripGrid& grid, const State& steady,
                                       double c_star, const DichotomyOptions& opt = {}) {
  if (traj.snapshots.empty()) throw DiagnosticsError("dichotomy_check: empty trajectory");
  if (!(c_star > 0.0)) throw ConfigError("dichotomy_check: c_star must be > 0");
  const State& s = traj.snapshots.back();
  const State& s0 = traj.snapshots.front();
  DichotomyReport rep;
  rep.t = s.t;
  const double t = s.t - s0.t;
  const double r_out = opt.factor_out * c_star * t;
  const double r_in = opt.factor_in * c_star * t;
  const bool nonzero_init = s0.w.cwiseAbs().maxCoeff() > 0.0;
  for (std::size_t i = 0; i < grid.nx; ++i) {
    const double dist = std::abs(grid.x(i) - opt.origin);
    if (dist >= r_out) {
      double m = std::abs(s.u(i));
      for (std::size_t j = 0; j < grid.ny; ++j) m = std::max(m, std::abs(s.v(i, j)));
      rep.outer_sup = std::max(rep.outer_sup, m);
    }
    if (dist <= r_in && nonzero_init) {
      rep.inner_applicable = true;
      double m = std::abs(s.u(i) - steady.u(i));
      for (std::size_t j = 0; j < grid.ny; ++j) m = std::max(m, std::abs(s.v(i, j) - steady.v(i, j)));
      rep.inner_sup = std::max(rep.inner_sup, m);
    }
  }
  rep.outer_pass = rep.outer_sup < opt.threshold_out;
  rep.inner_pass = rep.inner_sup < opt.threshold_in;
  return rep;
}

/// Time step that makes L/c an integer multiple of the snapshot stride
/// (record_every * dt), no larger than dt_max. `multiple` additionally makes
/// L/(c') for c' = c * multiple / k align for k = 1..multiple when set to their
/// common denominator, e.g. 3 for comparing c and 1.5 c.
inline double aligned_dt(double L, double c, double dt_max, std::size_t record_every, std::size_t multiple = 1) {
  if (!(c > 0.0) || !(dt_max > 0.0) || record_every == 0 || multiple == 0)
    throw ConfigError("aligned_dt: c, dt_max, record_every and multiple must be positive");
  const double unit = L / c / static_cast<double>(multiple * record_every);
  const double n = std::ceil(unit / dt_max - 1e-12);
  return unit / n;
}

struct PulsatingOptions {
  double t_from = 0.0;  ///< only snapshots with t >= t_from are compared
  double x_lo = -std::numeric_limits<double>::infinity();
  double x_hi = std::numeric_limits<double>::infinity();
  std::vector<double> y_fractions{0.0, 0.25, 0.5};
};

struct PulsatingReport {
  double deviation = 0.0;
  double road_deviation = 0.0;
  double field_deviation = 0.0;
  std::size_t pairs = 0;
};

/// sup over snapshot pairs (t, t + L/c) with t >= t_from and nodes x in
/// [x_lo, x_hi] of |u(t + L/c, x) - u(t, x - L)|, and the same for v at the
/// rows nearest to y = fraction * R.
inline PulsatingReport pulsating_diagnostic(const Trajectory& traj, const StripGrid& grid, const ModelParams& params,
                                            double c, const PulsatingOptions& opt = {}) {
  if (!(c > 0.0)) throw ConfigError("pulsating_diagnostic: c must be > 0");
  const double shift_t = params.L / c;
  const std::size_t shift_i = grid.nx_period;
  std::vector<std::size_t> rows;
  for (double f : opt.y_fractions) {
    const auto j = static_cast<std::size_t>(std::llround(f * params.R / grid.dy));
    if (j < grid.ny) rows.push_back(j);
  }

  PulsatingReport rep;
  const auto& snaps = traj.snapshots;
  std::size_t b = 0;
  for (std::size_t a = 0; a < snaps.size(); ++a) {
    if (snaps[a].t < opt.t_from - 1e-12) continue;
    const double target = snaps[a].t + shift_t;
    const double tol = 1e-9 * std::max(1.0, std::abs(target));
    while (b < snaps.size() && snaps[b].t < target - tol) ++b;
    if (b >= snaps.size()) break;
    if (std::abs(snaps[b].t - target) > tol) continue;
    ++rep.pairs;
    for (std::size_t i = shift_i; i < grid.nx; ++i) {
      const double x = grid.x(i);
      if (x < opt.x_lo || x > opt.x_hi) continue;
      rep.road_deviation = std::max(rep.road_deviation, std::abs(snaps[b].u(i) - snaps[a].u(i - shift_i)));
      for (std::size_t j : rows)
        rep.field_deviation =
            std::max(rep.field_deviation, std::abs(snaps[b].v(i, j) - snaps[a].v(i - shift_i, j)));
    }
  }
  if (rep.pairs == 0) {
    std::ostringstream os;
    os << "pulsating_diagnostic: no snapshot pair separated by L/c = " << shift_t
       << "; choose dt with aligned_dt so L/c is a multiple of the snapshot stride";
    throw DiagnosticsError(os.str());
  }
  rep.deviation = std::max(rep.road_deviation, rep.field_deviation);
  return rep;
}

}  // namespace fieldroad
