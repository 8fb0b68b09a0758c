#pragma once

// Principal eigenvalue lambda_R(alpha) of the twisted periodic problem and its
// half-plane limit lambda(alpha) = lim_{R -> inf} lambda_R(alpha).

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
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

/// Lambda_zeta(alpha) = max{D a^2 + nu - mu + mu nu / d, d (a^2 + 1) + M}.
inline double shift_bound(const ModelParams& p, const ReactionSpec& spec, double alpha) {
  const double a2 = alpha * alpha;
  return std::max(p.D * a2 + p.nu - p.mu + p.mu * p.nu / p.d, p.d * (a2 + 1.0) + spec.M());
}

/// Two-sided bound on -lambda_R(alpha):
///   max{D a^2 - mu, d a^2 + m - d pi^2/R^2} < -lambda_R(alpha) < Lambda_zeta(alpha).
struct EigenBounds {
  double lower;  ///< on -lambda
  double upper;  ///< on -lambda
};

inline EigenBounds strip_bounds(const ModelParams& p, const ReactionSpec& spec, double alpha) {
  const double a2 = alpha * alpha;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return {std::max(p.D * a2 - p.mu, p.d * a2 + spec.m() - p.d * pi2 / (p.R * p.R)), shift_bound(p, spec, alpha)};
}

/// Half-plane version: max{D a^2 - mu, d a^2 + m} <= -lambda(alpha) <= Lambda_zeta(alpha).
inline EigenBounds halfplane_bounds(const ModelParams& p, const ReactionSpec& spec, double alpha) {
  const double a2 = alpha * alpha;
  return {std::max(p.D * a2 - p.mu, p.d * a2 + spec.m()), shift_bound(p, spec, alpha)};
}

struct EigenPair {
  double alpha = 0.0;
  double lambda = 0.0;
  Eigen::VectorXd p;  ///< road eigenvector, max norm 1
  Eigen::VectorXd q;  ///< field eigenvector, row-major (j outer), rows j < ny
  double residual = 0.0;
  std::size_t iterations = 0;
  std::size_t factorizations = 0;
  double shift_used = 0.0;
  /// Collatz-Wielandt enclosure of lambda from the final iterate.
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  AdvectionScheme advection = AdvectionScheme::Centered;
};

struct EigenOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 20000;
  /// Iterations between attempts to move the shift next to the bracket.
  std::size_t refresh = 12;
  std::size_t max_refactorizations = 8;
};

namespace detail {

inline void factorize(Eigen::SparseLU<SparseMatrix>& lu, const SparseMatrix& a, double shift) {
  SparseMatrix id(a.rows(), a.cols());
  id.setIdentity();
  SparseMatrix b = a + shift * id;
  b.makeCompressed();
  lu.compute(b);
  if (lu.info() != Eigen::Success)
    throw NumericalError("shifted operator factorization failed: " + lu.lastErrorMessage());
}

inline double inf_norm(const SparseMatrix& a) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(a.rows());
  for (Eigen::Index k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.maxCoeff();
}

struct PowerResult {
  Eigen::VectorXd x;
  double lambda = 0.0;
  double residual = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double shift = 0.0;
  std::size_t iterations = 0;
  std::size_t factorizations = 0;
};

// Inverse power iteration on (A + shift I)^{-1} from the all-ones vector.
//
// For a positive iterate x and y = (A + shift I)^{-1} x the ratios y_i / x_i
// enclose the Perron root of the inverse, hence
//   1/max(y/x) - shift <= lambda <= 1/min(y/x) - shift.
// Once that enclosure is narrow compared to the distance from -shift, the
// shift is moved just below the enclosure. A + shift' I then stays a
// nonsingular M-matrix (shift' > -lambda) and the slow contraction of the
// y-modes becomes a fast one.
inline PowerResult power_iterate(const SparseMatrix& A, double shift, double alpha, const EigenOptions& opt) {
  if (!(opt.tol > 0.0)) throw ConfigError("eigen tol must be > 0");
  const Eigen::Index n = A.rows();
  Eigen::SparseLU<SparseMatrix> lu;
  factorize(lu, A, shift);

  PowerResult out;
  out.factorizations = 1;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd y(n);
  std::size_t since_shift = 0;
  // A x cannot be formed more accurately than this, so a smaller residual is unattainable.
  const double res_floor = 64.0 * std::numeric_limits<double>::epsilon() * inf_norm(A);

  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    y = lu.solve(x);
    double rmin = std::numeric_limits<double>::infinity();
    double rmax = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!(y[k] > 0.0)) {
        std::ostringstream os;
        os << "power iterate lost positivity at unknown " << k << " (alpha=" << alpha
           << "); the operator is not an M-matrix on this grid, refine it";
        throw AssemblyRegimeError(os.str());
      }
      const double r = y[k] / x[k];
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
    const double lo = 1.0 / rmax - shift;
    const double hi = 1.0 / rmin - shift;
    const double rho = x.dot(y) / x.dot(x);
    const double lam = 1.0 / rho - shift;

    const double scale = y.maxCoeff();
    const double change = (y / scale - x).cwiseAbs().maxCoeff();
    x = y / scale;
    ++since_shift;

    if (change < opt.tol) {
      const Eigen::VectorXd ax = A * x;
      const double lam_rq = x.dot(ax) / x.dot(x);
      const double res = (ax - lam_rq * x).cwiseAbs().maxCoeff() / x.cwiseAbs().maxCoeff();
      if (res <= std::max(opt.tol, res_floor)) {
        out.x = std::move(x);
        out.lambda = lam_rq;
        out.residual = res;
        out.lo = lo;
        out.hi = hi;
        out.shift = shift;
        out.iterations = it;
        return out;
      }
    }

    if (since_shift >= opt.refresh && out.factorizations <= opt.max_refactorizations) {
      const double eta = std::max(hi - lo, 1e-7 * (1.0 + std::abs(lo)));
      const double next = -lo + eta;
      // Refactor only when it brings the shift four times closer to the spectrum.
      if (next < shift && (eta + (lam - lo)) < 0.25 * (shift + lam)) {
        shift = next;
        factorize(lu, A, shift);
        ++out.factorizations;
        since_shift = 0;
      }
    }
  }
  std::ostringstream os;
  os << "power iteration did not converge in " << opt.max_iterations << " iterations (alpha=" << alpha << ")";
  throw ConvergenceError(os.str());
}

}  // namespace detail

/// lambda_R(alpha) on a one-period periodic grid (R = grid.R) together with
/// the positive eigenvector pair, normalised to max p = 1.
///
/// Factorizes A + Lambda I with Lambda = Lambda_zeta(alpha) + 1 and runs power
/// iteration on the inverse; lambda = 1/rho - Lambda.
inline EigenPair principal_eigen(const ModelParams& params, const ReactionSpec& spec, const StripGrid& grid,
                                 double alpha, const EigenOptions& opt = {}) {
  if (!grid.periodic()) throw ConfigError("principal_eigen needs a one-period periodic grid");
  const auto op = assemble_eigen_operator(params, spec, grid, alpha);
  auto pr = detail::power_iterate(op.matrix, shift_bound(params, spec, alpha) + 1.0, alpha, opt);

  const auto nx = static_cast<Eigen::Index>(grid.nx);
  const double pmax = pr.x.head(nx).maxCoeff();
  pr.x /= pmax;

  EigenPair ep;
  ep.alpha = alpha;
  ep.lambda = pr.lambda;
  ep.p = pr.x.head(nx);
  ep.q = pr.x.tail(pr.x.size() - nx);
  ep.residual = pr.residual;
  ep.iterations = pr.iterations;
  ep.factorizations = pr.factorizations;
  ep.shift_used = pr.shift;
  ep.lambda_lo = pr.lo;
  ep.lambda_hi = pr.hi;
  ep.advection = op.advection;
  return ep;
}

/// Lower bound on lambda from any positive test vector x with x = 0 on the cap:
///   lambda >= min_i (A x)_i / x_i.
/// A discrete form of the max-min characterisation, used as a debug check.
inline double maxmin_lower_bound(const DiscreteOperator& op, const Eigen::VectorXd& x) {
  const Eigen::VectorXd ax = op.matrix * x;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0)) throw DomainError("maxmin_lower_bound needs a positive test vector");
    best = std::min(best, ax[k] / x[k]);
  }
  return best;
}

/// How the strip grid is built as R varies: nx fixed, dy fixed.
struct GridPolicy {
  long nx = 64;
  double dy = 0.1;
  double R0 = 5.0;     ///< first width of the schedule
  double R_max = 40.0; ///< last admissible width
  double growth = 2.0;

  StripGrid grid_for(const ModelParams& p) const { return build_grid_dy(p, nx, dy); }

  std::vector<double> schedule() const {
    if (!(R0 > 0.0) || !(R_max >= R0) || !(growth > 1.0)) throw ConfigError("invalid R schedule");
    std::vector<double> out;
    for (double R = R0; R <= R_max * (1.0 + 1e-12); R *= growth) out.push_back(R);
    return out;
  }
};

/// Memoised lambda_R(alpha) evaluations under a fixed GridPolicy.
class EigenEvaluator {
 public:
  EigenEvaluator(ModelParams params, ReactionSpec spec, GridPolicy policy, EigenOptions opt = {})
      : params_(params), spec_(std::move(spec)), policy_(policy), opt_(opt) {}

  const ModelParams& params() const { return params_; }
  const ReactionSpec& spec() const { return spec_; }
  const GridPolicy& policy() const { return policy_; }
  const EigenOptions& options() const { return opt_; }
  std::size_t solves() const { return solves_; }

  EigenPair pair(double R, double alpha) const {
    ModelParams p = params_;
    p.R = R;
    ++solves_;
    return principal_eigen(p, spec_, policy_.grid_for(p), alpha, opt_);
  }

  struct Summary {
    double lambda;
    double residual;
    std::size_t iterations;
  };

  Summary summary(double R, double alpha) const {
    const auto key = std::make_pair(R, alpha);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const auto ep = pair(R, alpha);
    const Summary sm{ep.lambda, ep.residual, ep.iterations};
    cache_.emplace(key, sm);
    return sm;
  }

  double lambda(double R, double alpha) const { return summary(R, alpha).lambda; }

 private:
  ModelParams params_;
  ReactionSpec spec_;
  GridPolicy policy_;
  EigenOptions opt_;
  mutable std::map<std::pair<double, double>, Summary> cache_;
  mutable std::size_t solves_ = 0;
};

struct HalfPlaneEigen {
  double alpha = 0.0;
  double lambda_inf = 0.0;
  std::vector<double> R_schedule;
  std::vector<double> lambdas;
  bool converged = false;
  /// max{D a^2 - mu, d a^2 + m} - d pi^2/R_last^2 < -lambda_inf <= Lambda_zeta:
  /// the half-plane bound, relaxed on the lower side by the strip correction at the last width.
  bool bounds_ok = false;
};

/// lambda_R(alpha) along R0 * growth^k (dy fixed, so ny grows with R) until two
/// successive values differ by less than tol_limit or R_max is reached. The
/// last value is reported as lambda(alpha); the sequence is a one-sided bracket.
inline HalfPlaneEigen halfplane_eigen(const EigenEvaluator& ev, double alpha, double tol_limit) {
  if (!(tol_limit > 0.0)) throw ConfigError("tol_limit must be > 0");
  HalfPlaneEigen out;
  out.alpha = alpha;
  for (double R : ev.policy().schedule()) {
    const double lam = ev.lambda(R, alpha);
    // Road-localized eigenvectors make lambda_R flat in R up to solver roundoff.
    if (!out.lambdas.empty() && lam > out.lambdas.back() + 1e-9 * (1.0 + std::abs(lam))) {
      std::ostringstream os;
      os << "lambda_R(" << alpha << ") not decreasing in R at R=" << R << " (" << out.lambdas.back() << " -> "
         << lam << "); grid too coarse";
      throw NumericalError(os.str());
    }
    out.R_schedule.push_back(R);
    out.lambdas.push_back(lam);
    if (out.lambdas.size() >= 2 && out.lambdas[out.lambdas.size() - 2] - lam < tol_limit) {
      out.converged = true;
      break;
    }
  }
  out.lambda_inf = out.lambdas.back();
  const auto& p = ev.params();
  const auto hb = halfplane_bounds(p, ev.spec(), alpha);
  const double R = out.R_schedule.back();
  const double slack = p.d * std::numbers::pi * std::numbers::pi / (R * R);
  out.bounds_ok = (-out.lambda_inf > hb.lower - slack) && (-out.lambda_inf <= hb.upper);
  return out;
}

inline HalfPlaneEigen halfplane_eigen(const ModelParams& params, const ReactionSpec& spec, double alpha,
                                      const GridPolicy& policy, double tol_limit, const EigenOptions& opt = {}) {
  return halfplane_eigen(EigenEvaluator(params, spec, policy, opt), alpha, tol_limit);
}

struct PropertyResult {
  std::string name;
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();  ///< >= 0 means satisfied
  std::size_t checks = 0;
};

struct EigenPropertyReport {
  std::vector<PropertyResult> properties;
  bool refined = false;
  bool pass() const {
    return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.pass; });
  }
  const PropertyResult& get(const std::string& name) const {
    for (const auto& p : properties)
      if (p.name == name) return p;
    throw std::out_of_range("no property " + name);
  }
};

struct PropertyOptions {
  double tol_num = 1e-8;       ///< slack for concavity
  double even_rel_tol = 1e-8;  ///< relative tolerance for lambda(a) = lambda(-a)
  double zeta_raise = 0.1;
  bool allow_refinement = true;
};

namespace detail {

inline EigenPropertyReport eigen_properties_once(const ModelParams& params, const ReactionSpec& spec,
                                                 const GridPolicy& policy, std::vector<double> alphas,
                                                 std::vector<double> R_list, const PropertyOptions& po,
                                                 const EigenOptions& eo) {
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  std::sort(R_list.begin(), R_list.end());
  const EigenEvaluator ev(params, spec, policy, eo);
  const EigenEvaluator raised(params, spec.raised(po.zeta_raise), policy, eo);

  PropertyResult bounds{"bounds"}, even{"evenness"}, decR{"decreasing_in_R"}, conc{"concavity"},
      zeta{"monotone_in_zeta"};
  auto record = [](PropertyResult& pr, double margin) {
    ++pr.checks;
    pr.worst_margin = std::min(pr.worst_margin, margin);
    if (!(margin >= 0.0)) pr.pass = false;
  };

  for (double R : R_list) {
    ModelParams pR = params;
    pR.R = R;
    for (double a : alphas) {
      const double lam = ev.lambda(R, a);
      const auto b = strip_bounds(pR, spec, a);
      // strict on both sides: margin must be > 0
      const double m_bounds = std::min(-lam - b.lower, b.upper + lam);
      record(bounds, m_bounds > 0.0 ? m_bounds : -std::abs(m_bounds) - 1e-300);
      const double lam_neg = ev.lambda(R, -a);
      record(even, po.even_rel_tol * std::max(1.0, std::abs(lam)) - std::abs(lam - lam_neg));
      record(zeta, lam - raised.lambda(R, a));
    }
    for (std::size_t i = 0; i < alphas.size(); ++i)
      for (std::size_t j = i + 1; j < alphas.size(); ++j) {
        const double mid = 0.5 * (alphas[i] + alphas[j]);
        record(conc, ev.lambda(R, mid) - 0.5 * (ev.lambda(R, alphas[i]) + ev.lambda(R, alphas[j])) + po.tol_num);
      }
  }
  for (double a : alphas)
    for (std::size_t k = 0; k + 1 < R_list.size(); ++k) {
      const double diff = ev.lambda(R_list[k], a) - ev.lambda(R_list[k + 1], a);
      record(decR, diff > 0.0 ? diff : -std::abs(diff) - 1e-300);
    }

  EigenPropertyReport rep;
  rep.properties = {bounds, even, decR, conc, zeta};
  return rep;
}

}  // namespace detail

/// Checks, over all sampled alpha and R: the strict two-sided bounds,
/// lambda(a) = lambda(-a), strict decrease in R, midpoint concavity in alpha,
/// and lambda non-increasing when zeta is raised. A failure triggers one rerun
/// on a grid refined by two in both directions.
inline EigenPropertyReport verify_eigen_properties(const ModelParams& params, const ReactionSpec& spec,
                                                   const GridPolicy& policy, const std::vector<double>& alphas,
                                                   const std::vector<double>& R_list, const PropertyOptions& po = {},
                                                   const EigenOptions& eo = {}) {
  if (alphas.empty() || R_list.empty()) throw ConfigError("verify_eigen_properties needs nonempty alpha and R lists");
  auto rep = detail::eigen_properties_once(params, spec, policy, alphas, R_list, po, eo);
  if (!rep.pass() && po.allow_refinement) {
    GridPolicy fine = policy;
    fine.nx *= 2;
    fine.dy *= 0.5;
    rep = detail::eigen_properties_once(params, spec, fine, alphas, R_list, po, eo);
    rep.refined = true;
  }
  return rep;
}

}  // namespace fieldroad
