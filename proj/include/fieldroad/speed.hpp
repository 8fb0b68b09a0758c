#pragma once

// Spreading speeds c*_R = inf_{a>0} -lambda_R(a)/a and c* = inf_{a>0} -lambda(a)/a.

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fieldroad/errors.hpp"
#include "fieldroad/spectral.hpp"

namespace fieldroad {

enum class Direction { Right, Left };
enum class SpeedMode { Strip, HalfPlane };

inline const char* to_string(Direction d) { return d == Direction::Right ? "right" : "left"; }
inline const char* to_string(SpeedMode m) { return m == SpeedMode::Strip ? "strip" : "halfplane"; }

struct SpeedResult {
  double c_star = 0.0;
  double alpha_star = 0.0;
  std::pair<double, double> bracket{0.0, 0.0};
  std::size_t evaluations = 0;
  SpeedMode mode = SpeedMode::Strip;
  double R = 0.0;  ///< strip width, or the last width of the schedule in half-plane mode
  Direction direction = Direction::Right;

  // Half-plane mode only.
  std::vector<double> R_schedule;
  std::vector<double> strip_speeds;
  std::vector<double> strip_alphas;
  std::vector<std::size_t> strip_evaluations;
  bool strip_speeds_increasing = true;
  bool strip_speeds_below = true;
};

struct MinimizeResult {
  double x_min = 0.0;
  double f_min = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t evaluations = 0;
};

/// Minimises a quasi-convex g on (0, inf): geometric bracketing from `seed`
/// with factor 2, then golden-section search down to width `tol`.
inline MinimizeResult minimize_positive(const std::function<double(double)>& g, double tol, double seed = 1.0,
                                        std::size_t max_expansions = 60) {
  if (!(tol > 0.0)) throw ConfigError("tol_alpha must be > 0");
  MinimizeResult out;
  auto eval = [&](double a) {
    ++out.evaluations;
    return g(a);
  };
  double a = 0.5 * seed, b = seed, c = 2.0 * seed;
  double fa = eval(a), fb = eval(b), fc = eval(c);
  std::size_t expansions = 0;
  while (!(fb <= fa && fb <= fc)) {
    if (++expansions > max_expansions) throw NumericalError("speed search: no bracket found in 60 expansions");
    if (fa < fb) {
      c = b, fc = fb;
      b = a, fb = fa;
      a = 0.5 * a, fa = eval(a);
    } else {
      a = b, fa = fb;
      b = c, fb = fc;
      c = 2.0 * c, fc = eval(c);
    }
  }

  constexpr double kInvPhi = 0.6180339887498949;
  double lo = a, hi = c;
  double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
  double f1 = eval(x1), f2 = eval(x2);
  double best_x = b, best_f = fb;
  auto keep = [&](double x, double f) {
    if (f < best_f) best_x = x, best_f = f;
  };
  keep(x1, f1);
  keep(x2, f2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1, f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = eval(x1);
      keep(x1, f1);
    } else {
      lo = x1;
      x1 = x2, f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = eval(x2);
      keep(x2, f2);
    }
  }
  out.x_min = best_x;
  out.f_min = best_f;
  out.lo = lo;
  out.hi = hi;
  return out;
}

namespace detail {

inline void require_persistence(const EigenEvaluator& ev, double R) {
  const double lam0 = ev.lambda(R, 0.0);
  if (!(lam0 < 0.0)) {
    std::ostringstream os;
    os << "below persistence: lambda_R(0) = " << lam0 << " >= 0 at R = " << R;
    throw DomainError(os.str());
  }
}

inline SpeedResult strip_speed(const EigenEvaluator& ev, double R, Direction dir, double tol_alpha) {
  require_persistence(ev, R);
  const double sign = dir == Direction::Right ? 1.0 : -1.0;
  const std::size_t before = ev.solves();
  auto g = [&](double a) { return -ev.lambda(R, sign * a) / a; };
  const auto mr = minimize_positive(g, tol_alpha);
  SpeedResult out;
  out.c_star = mr.f_min;
  out.alpha_star = mr.x_min;
  out.bracket = {mr.lo, mr.hi};
  out.evaluations = ev.solves() - before;
  out.mode = SpeedMode::Strip;
  out.R = R;
  out.direction = dir;
  return out;
}

}  // namespace detail

/// c*_{R,+} = inf_{a>0} -lambda_R(a)/a (Right) or c*_{R,-} = inf_{a>0} -lambda_R(-a)/a (Left)
/// on a one-period periodic grid. Requires lambda_R(0) < 0.
inline SpeedResult speed_strip(const ModelParams& params, const ReactionSpec& spec, const StripGrid& grid,
                               Direction direction, double tol_alpha = 1e-4, const EigenOptions& eo = {}) {
  if (!grid.periodic()) throw ConfigError("speed_strip needs a one-period periodic grid");
  ModelParams p = params;
  p.R = grid.R;
  GridPolicy policy;
  policy.nx = static_cast<long>(grid.nx);
  policy.dy = grid.dy;
  policy.R0 = policy.R_max = grid.R;
  return detail::strip_speed(EigenEvaluator(p, spec, policy, eo), grid.R, direction, tol_alpha);
}

/// c* from the half-plane limit lambda(a), plus the strip speeds c*_R along the
/// schedule reached at the minimiser. The strip speeds must increase with R and
/// stay below c*; both facts are reported.
inline SpeedResult speed_halfplane(const ModelParams& params, const ReactionSpec& spec, const GridPolicy& policy,
                                   double tol_alpha = 1e-4, double tol_limit = 1e-6, const EigenOptions& eo = {}) {
  const EigenEvaluator ev(params, spec, policy, eo);
  const auto schedule = policy.schedule();
  detail::require_persistence(ev, schedule.back());
  const std::size_t before = ev.solves();
  auto g = [&](double a) { return -halfplane_eigen(ev, a, tol_limit).lambda_inf / a; };
  const auto mr = minimize_positive(g, tol_alpha);
  SpeedResult out;
  out.c_star = mr.f_min;
  out.alpha_star = mr.x_min;
  out.bracket = {mr.lo, mr.hi};
  out.evaluations = ev.solves() - before;
  out.mode = SpeedMode::HalfPlane;
  out.R_schedule = halfplane_eigen(ev, mr.x_min, tol_limit).R_schedule;
  out.R = out.R_schedule.back();

  // Every strip in the schedule except the last one used for the limit.
  for (std::size_t k = 0; k + 1 < out.R_schedule.size(); ++k) {
    const double R = out.R_schedule[k];
    const auto sr = detail::strip_speed(ev, R, Direction::Right, tol_alpha);
    out.strip_speeds.push_back(sr.c_star);
    out.strip_alphas.push_back(sr.alpha_star);
    out.strip_evaluations.push_back(sr.evaluations);
  }
  for (std::size_t k = 0; k < out.strip_speeds.size(); ++k) {
    if (k > 0 && !(out.strip_speeds[k] > out.strip_speeds[k - 1])) out.strip_speeds_increasing = false;
    if (!(out.strip_speeds[k] < out.c_star)) out.strip_speeds_below = false;
  }
  return out;
}

}  // namespace fieldroad
