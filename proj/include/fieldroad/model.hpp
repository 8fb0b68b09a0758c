#pragma once

// Physical parameters of the field-road system and the periodic KPP reaction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "fieldroad/errors.hpp"

namespace fieldroad {

/// Constants of the system
///   u_t - D u_xx = nu v(x,0) - mu u                      (road, y = 0)
///   v_t - d Lap v = f(x, v)                              (field, 0 < y < R)
///   -d v_y(x,0) = mu u - nu v(x,0),  v(x,R) = 0
/// with f L-periodic in x.
struct ModelParams {
  double D = 1.0;   ///< road diffusivity
  double d = 1.0;   ///< field diffusivity
  double mu = 1.0;  ///< road -> field exchange rate
  double nu = 1.0;  ///< field -> road exchange rate
  double L = 1.0;   ///< period in x
  double R = 1.0;   ///< strip width

  /// Road component of the carrying-capacity pair (nu/mu, 1).
  double road_capacity() const { return nu / mu; }

  void validate() const {
    const std::pair<const char*, double> fields[] = {
        {"D", D}, {"d", d}, {"mu", mu}, {"nu", nu}, {"L", L}, {"R", R}};
    for (const auto& [name, value] : fields) {
      if (!(value > 0.0) || !std::isfinite(value)) {
        std::ostringstream os;
        os << name << " must be > 0 (got " << value << ")";
        throw ConfigError(os.str());
      }
    }
  }
};

inline double reduce_periodic(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

/// Truncated Fourier series  mean + sum_k (c_k cos(2 pi k x/L) + s_k sin(2 pi k x/L)).
struct FourierCoefficient {
  double mean = 1.0;
  std::vector<double> cos_amps;
  std::vector<double> sin_amps;
  double period = 1.0;

  double operator()(double x) const {
    const double w = 2.0 * std::numbers::pi / period;
    double a = mean;
    for (std::size_t k = 0; k < cos_amps.size(); ++k)
      a += cos_amps[k] * std::cos(w * static_cast<double>(k + 1) * x);
    for (std::size_t k = 0; k < sin_amps.size(); ++k)
      a += sin_amps[k] * std::sin(w * static_cast<double>(k + 1) * x);
    return a;
  }
};

/// Samples a_k = a(k L / n), k = 0..n-1, interpolated linearly with periodic wrap.
struct TableCoefficient {
  std::vector<double> values;
  double period = 1.0;

  double operator()(double x) const {
    const std::size_t n = values.size();
    const double s = reduce_periodic(x, period) / period * static_cast<double>(n);
    auto k = static_cast<std::size_t>(std::floor(s));
    if (k >= n) k = n - 1;
    const double t = s - static_cast<double>(k);
    return (1.0 - t) * values[k] + t * values[(k + 1) % n];
  }
};

using PeriodicCoefficient = std::variant<FourierCoefficient, TableCoefficient>;

inline double period_of(const PeriodicCoefficient& a) {
  return std::visit([](const auto& c) { return c.period; }, a);
}

inline double evaluate(const PeriodicCoefficient& a, double x) {
  return std::visit([x](const auto& c) { return c(x); }, a);
}

/// f(x, v) = a(x) v (1 - v).
struct Logistic {
  PeriodicCoefficient a;
};

/// User nonlinearity; `f_v0` must return d f / d v at v = 0. Validated by kpp_check.
struct Custom {
  std::function<double(double, double)> f;
  std::function<double(double)> f_v0;
  double period = 1.0;
};

class ReactionSpec {
 public:
  using Family = std::variant<Logistic, Custom>;

  explicit ReactionSpec(Family family) : family_(std::move(family)) {
    if (const auto* lg = std::get_if<Logistic>(&family_)) {
      if (const auto* tb = std::get_if<TableCoefficient>(&lg->a); tb && tb->values.size() < 2)
        throw ConfigError("sampled coefficient table needs at least 2 values");
    } else if (const auto* c = std::get_if<Custom>(&family_)) {
      if (!c->f || !c->f_v0) throw ConfigError("custom reaction requires f and f_v0");
    }
    if (!(period() > 0.0)) throw ConfigError("reaction period must be > 0");
    compute_extrema();
  }

  static ReactionSpec logistic(double mean, std::vector<double> cos_amps = {},
                               std::vector<double> sin_amps = {}, double period = 1.0) {
    return ReactionSpec(
        Logistic{FourierCoefficient{mean, std::move(cos_amps), std::move(sin_amps), period}});
  }

  static ReactionSpec logistic_table(std::vector<double> values, double period = 1.0) {
    return ReactionSpec(Logistic{TableCoefficient{std::move(values), period}});
  }

  const Family& family() const { return family_; }
  bool is_logistic() const { return std::holds_alternative<Logistic>(family_); }

  double period() const {
    if (const auto* lg = std::get_if<Logistic>(&family_)) return period_of(lg->a);
    return std::get<Custom>(family_).period;
  }

  /// min and max of f_v(x, 0) over one period.
  double m() const { return m_; }
  double M() const { return M_; }

  /// Unchecked evaluation used inside time stepping, where roundoff can leave
  /// densities at -1e-300 or so.
  double raw(double x, double v) const {
    const double xr = reduce_periodic(x, period());
    if (const auto* lg = std::get_if<Logistic>(&family_)) return evaluate(lg->a, xr) * v * (1.0 - v);
    return std::get<Custom>(family_).f(xr, v);
  }

  double linearization(double x) const {
    const double xr = reduce_periodic(x, period());
    if (const auto* lg = std::get_if<Logistic>(&family_)) return evaluate(lg->a, xr);
    return std::get<Custom>(family_).f_v0(xr);
  }

  /// Same reaction with f_v(x,0) raised by `delta` (logistic only: a -> a + delta).
  ReactionSpec raised(double delta) const {
    const auto* lg = std::get_if<Logistic>(&family_);
    if (!lg) throw ConfigError("raised() is only defined for the logistic family");
    return std::visit(
        [delta](auto c) {
          using C = decltype(c);
          if constexpr (std::is_same_v<C, FourierCoefficient>) {
            c.mean += delta;
          } else {
            for (double& v : c.values) v += delta;
          }
          return ReactionSpec(Logistic{PeriodicCoefficient{std::move(c)}});
        },
        lg->a);
  }

 private:
  void compute_extrema() {
    if (const auto* lg = std::get_if<Logistic>(&family_)) {
      if (const auto* tb = std::get_if<TableCoefficient>(&lg->a)) {
        auto [lo, hi] = std::minmax_element(tb->values.begin(), tb->values.end());
        m_ = *lo;
        M_ = *hi;
        return;
      }
    }
    constexpr int kSamples = 4096;
    m_ = std::numeric_limits<double>::infinity();
    M_ = -m_;
    for (int k = 0; k < kSamples; ++k) {
      const double z = linearization(period() * k / kSamples);
      m_ = std::min(m_, z);
      M_ = std::max(M_, z);
    }
  }

  Family family_;
  double m_ = 0.0;
  double M_ = 0.0;
};

/// f(x, v). Throws DomainError for v < 0.
inline double f_eval(const ReactionSpec& spec, double x, double v) {
  if (v < 0.0 || std::isnan(v)) throw DomainError("f_eval: density must be >= 0");
  return spec.raw(x, v);
}

/// zeta(x) = f_v(x, 0).
inline double fv0(const ReactionSpec& spec, double x) { return spec.linearization(x); }

struct KppViolation {
  double x;
  double v;
  std::string what;
};

struct KppReport {
  bool ok = true;
  double m = 0.0;
  double M = 0.0;
  std::size_t violation_count = 0;
  std::vector<KppViolation> violations;  ///< first few offending samples
};

/// Samples the KPP hypotheses on an n_x by n_v grid of (x, v):
/// f(x,0) = f(x,1) = 0, 0 < f <= f_v(x,0) v on (0,1), f < 0 on (1, v_max],
/// f/v strictly decreasing, and m > 0.
inline KppReport kpp_check(const ReactionSpec& spec, int n_x, int n_v, double v_max = 10.0) {
  if (n_x < 2 || n_v < 2) throw ConfigError("kpp_check: n_x and n_v must be >= 2");
  constexpr std::size_t kKeep = 32;
  constexpr double kZeroTol = 1e-12;
  KppReport rep;
  rep.m = std::numeric_limits<double>::infinity();
  rep.M = -rep.m;
  auto flag = [&](double x, double v, std::string what) {
    rep.ok = false;
    ++rep.violation_count;
    if (rep.violations.size() < kKeep) rep.violations.push_back({x, v, std::move(what)});
  };

  std::vector<double> vs;
  for (int l = 1; l < n_v; ++l) vs.push_back(static_cast<double>(l) / n_v);
  vs.push_back(1.0);
  for (int l = 1; l <= n_v; ++l) vs.push_back(1.0 + (v_max - 1.0) * l / n_v);

  const double L = spec.period();
  for (int k = 0; k < n_x; ++k) {
    const double z = spec.linearization(L * k / n_x);
    rep.m = std::min(rep.m, z);
    rep.M = std::max(rep.M, z);
  }
  // Reported first so it survives the cap on kept violations.
  if (!(rep.m > 0.0)) flag(0.0, 0.0, "m > 0 fails");
  for (int k = 0; k < n_x; ++k) {
    const double x = L * k / n_x;
    const double z = spec.linearization(x);
    if (std::abs(spec.raw(x, 0.0)) > kZeroTol) flag(x, 0.0, "f(x,0) = 0 fails");
    if (std::abs(spec.raw(x, 1.0)) > kZeroTol) flag(x, 1.0, "f(x,1) = 0 fails");
    double prev_ratio = std::numeric_limits<double>::infinity();
    for (double v : vs) {
      const double fx = spec.raw(x, v);
      if (v < 1.0) {
        if (!(fx > 0.0)) flag(x, v, "f > 0 on (0,1) fails");
        if (fx > z * v + kZeroTol * (1.0 + std::abs(z * v))) flag(x, v, "f <= f_v(x,0) v fails");
      } else if (v > 1.0 && !(fx < 0.0)) {
        flag(x, v, "f < 0 on (1,v_max] fails");
      }
      const double ratio = fx / v;
      if (!(ratio < prev_ratio)) flag(x, v, "f/v strictly decreasing fails");
      prev_ratio = ratio;
    }
  }
  return rep;
}

}  // namespace fieldroad
