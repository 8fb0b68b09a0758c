#pragma once

// Finite-difference operators for the twisted periodic eigenproblem
//   -D p'' + 2 D a p' + (-D a^2 + mu) p - nu q(x,0)               = s p
//   -d Lap q + 2 d a q_x - (d a^2 + zeta(x)) q                     = s q
//   -d q_y(x,0) + nu q(x,0) - mu p = 0,   q(x,R) = 0
// and for the linear part of the evolution system.

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "fieldroad/errors.hpp"
#include "fieldroad/grid.hpp"
#include "fieldroad/model.hpp"

namespace fieldroad {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class AdvectionScheme { Centered, Upwind };

struct Entry {
  std::size_t row;
  std::size_t col;
  double value;
};

struct DiscreteOperator {
  std::size_t dim = 0;
  SparseMatrix matrix;
  double alpha = 0.0;
  std::optional<double> shift_applied;
  AdvectionScheme advection = AdvectionScheme::Centered;

  /// Coordinate list sorted by (row, col), explicit zeros dropped.
  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    out.reserve(static_cast<std::size_t>(matrix.nonZeros()));
    for (Eigen::Index k = 0; k < matrix.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(matrix, k); it; ++it)
        if (it.value() != 0.0)
          out.push_back({static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col()), it.value()});
    std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    return out;
  }

  /// A + shift I.
  DiscreteOperator shifted(double shift) const {
    DiscreteOperator out = *this;
    SparseMatrix id(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    id.setIdentity();
    out.matrix = matrix + shift * id;
    out.matrix.makeCompressed();
    out.shift_applied = shift_applied.value_or(0.0) + shift;
    return out;
  }
};

/// Centered advection keeps the M-matrix sign pattern while |alpha| dx <= 1/2.
inline bool peclet_ok(double alpha, double dx) { return std::abs(alpha) * dx <= 0.5; }

namespace detail {

inline void check_period(const ModelParams& params, const ReactionSpec& spec) {
  if (std::abs(spec.period() - params.L) > 1e-12 * params.L)
    throw ConfigError("reaction period must equal L");
}

// Neighbor indices in x; a Neumann end reflects onto its interior neighbor.
inline std::pair<std::size_t, std::size_t> x_neighbors(const StripGrid& g, std::size_t i) {
  const std::size_t n = g.nx;
  if (g.periodic()) return {(i + n - 1) % n, (i + 1) % n};
  const std::size_t left = (i == 0) ? 1 : i - 1;
  const std::size_t right = (i + 1 == n) ? n - 2 : i + 1;
  return {left, right};
}

struct Builder {
  std::vector<Eigen::Triplet<double>> t;
  void add(std::size_t r, std::size_t c, double v) {
    if (v != 0.0) t.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), v);
  }
};

// -k u'' + 2 k alpha u' on row `row`, with `col(i)` mapping x-index to unknown.
template <class ColFn>
void add_x_terms(Builder& b, const StripGrid& g, std::size_t i, std::size_t row, ColFn col,
                 double k, double alpha, AdvectionScheme scheme) {
  const auto [left, right] = x_neighbors(g, i);
  const double h2 = g.dx * g.dx;
  b.add(row, col(i), 2.0 * k / h2);
  b.add(row, col(left), -k / h2);
  b.add(row, col(right), -k / h2);
  if (alpha == 0.0) return;
  if (scheme == AdvectionScheme::Centered) {
    b.add(row, col(right), k * alpha / g.dx);
    b.add(row, col(left), -k * alpha / g.dx);
  } else if (alpha > 0.0) {
    b.add(row, col(i), 2.0 * k * alpha / g.dx);
    b.add(row, col(left), -2.0 * k * alpha / g.dx);
  } else {
    b.add(row, col(i), -2.0 * k * alpha / g.dx);
    b.add(row, col(right), 2.0 * k * alpha / g.dx);
  }
}

inline DiscreteOperator assemble(const ModelParams& params, const ReactionSpec* spec,
                                 const StripGrid& g, double alpha) {
  params.validate();
  if (spec) check_period(params, *spec);
  if (!g.periodic() && alpha != 0.0) throw ConfigError("twisted operator needs a periodic grid");
  const auto scheme = peclet_ok(alpha, g.dx) ? AdvectionScheme::Centered : AdvectionScheme::Upwind;
  const double D = params.D, d = params.d, mu = params.mu, nu = params.nu;
  const double hy2 = g.dy * g.dy;

  Builder b;
  b.t.reserve(g.dim() * 6);
  auto road_col = [&](std::size_t i) { return g.road(i); };
  for (std::size_t i = 0; i < g.nx; ++i) {
    const std::size_t r = g.road(i);
    add_x_terms(b, g, i, r, road_col, D, alpha, scheme);
    b.add(r, r, mu - D * alpha * alpha);
    b.add(r, g.field(i, 0), -nu);
  }
  for (std::size_t j = 0; j < g.ny; ++j) {
    auto field_col = [&](std::size_t i) { return g.field(i, j); };
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t r = g.field(i, j);
      add_x_terms(b, g, i, r, field_col, d, alpha, scheme);
      double diag = 2.0 * d / hy2 - d * alpha * alpha;
      if (spec) diag -= spec->linearization(g.x(i));
      if (j == 0) {
        // Ghost node q_{-1} = q_1 + (2 dy / d)(mu p - nu q_0) from the exchange condition.
        diag += 2.0 * nu / g.dy;
        b.add(r, g.road(i), -2.0 * mu / g.dy);
        b.add(r, g.field(i, 1), -2.0 * d / hy2);
      } else {
        b.add(r, g.field(i, j - 1), -d / hy2);
        if (j + 1 < g.ny) b.add(r, g.field(i, j + 1), -d / hy2);
      }
      b.add(r, r, diag);
    }
  }

  DiscreteOperator op;
  op.dim = g.dim();
  op.alpha = alpha;
  op.advection = scheme;
  op.matrix.resize(static_cast<Eigen::Index>(op.dim), static_cast<Eigen::Index>(op.dim));
  op.matrix.setFromTriplets(b.t.begin(), b.t.end());
  op.matrix.prune(0.0);
  op.matrix.makeCompressed();
  return op;
}

}  // namespace detail

/// Operator A of the twisted eigenproblem: A (p, q) = sigma (p, q) on a periodic grid.
inline DiscreteOperator assemble_eigen_operator(const ModelParams& params, const ReactionSpec& spec,
                                                const StripGrid& grid, double alpha) {
  return detail::assemble(params, &spec, grid, alpha);
}

/// Diffusion, exchange and Dirichlet cap at alpha = 0, without the reaction term.
/// Works on periodic grids and on Neumann windows.
inline DiscreteOperator assemble_evolution_operator(const ModelParams& params, const ReactionSpec& spec,
                                                    const StripGrid& grid) {
  detail::check_period(params, spec);
  return detail::assemble(params, nullptr, grid, 0.0);
}

/// `row col value` per line, 0-based, 17 significant digits.
inline void write_coo(std::ostream& os, const DiscreteOperator& op) {
  os << std::setprecision(17);
  for (const auto& e : op.entries()) os << e.row << ' ' << e.col << ' ' << e.value << '\n';
}

inline void write_coo(const std::string& path, const DiscreteOperator& op) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path);
  write_coo(os, op);
}

}  // namespace fieldroad
