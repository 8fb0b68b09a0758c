#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>

#include "fieldroad/errors.hpp"
#include "fieldroad/model.hpp"

namespace fieldroad {

enum class XBoundary { Periodic, Neumann };

/// Finite-difference grid on the strip [x-range] x [0, R].
///
/// x-nodes sit at x_i = i dx. A periodic grid covers one period [0, L) with
/// nx = L/dx nodes; a Neumann window covers [0, copies L] with copies*nx_per + 1
/// nodes and reflecting ends. y-nodes are y_j = j dy for j = 0..ny; row ny is
/// the Dirichlet cap and carries no unknowns.
///
/// Unknown ordering: road block (i = 0..nx-1) first, then the field row-major
/// with j outer and i inner.
struct StripGrid {
  std::size_t nx = 0;  ///< x-nodes carrying unknowns
  std::size_t ny = 0;  ///< y-intervals across [0, R]
  double dx = 0.0;
  double dy = 0.0;
  double L = 1.0;
  double R = 1.0;
  std::size_t nx_period = 0;  ///< nodes per period
  std::size_t copies = 1;     ///< periods covered
  XBoundary boundary = XBoundary::Periodic;

  std::size_t dim() const { return nx + nx * ny; }
  std::size_t road(std::size_t i) const { return i; }
  std::size_t field(std::size_t i, std::size_t j) const { return nx + j * nx + i; }
  double x(std::size_t i) const { return static_cast<double>(i) * dx; }
  double y(std::size_t j) const { return static_cast<double>(j) * dy; }
  double width() const { return static_cast<double>(copies) * L; }
  bool periodic() const { return boundary == XBoundary::Periodic; }
};

/// One-period periodic grid with nx cells across [0, L) and ny intervals across [0, R].
inline StripGrid build_grid(const ModelParams& params, long nx, long ny) {
  params.validate();
  if (nx < 4 || ny < 4) {
    std::ostringstream os;
    os << "grid: nx and ny must be >= 4 (got nx=" << nx << ", ny=" << ny << ")";
    throw ConfigError(os.str());
  }
  StripGrid g;
  g.nx = static_cast<std::size_t>(nx);
  g.ny = static_cast<std::size_t>(ny);
  g.nx_period = g.nx;
  g.L = params.L;
  g.R = params.R;
  g.dx = params.L / static_cast<double>(nx);
  g.dy = params.R / static_cast<double>(ny);
  return g;
}

/// Grid whose dy is fixed and whose ny follows R (rounded to the nearest
/// integer, so R is reproduced exactly when R/dy is integral).
inline StripGrid build_grid_dy(const ModelParams& params, long nx, double dy) {
  if (!(dy > 0.0)) throw ConfigError("grid: dy must be > 0");
  const long ny = static_cast<long>(std::llround(params.R / dy));
  return build_grid(params, nx, ny);
}

/// Spreading window of `copies` periods with reflecting far ends.
inline StripGrid tile_window(const StripGrid& period_grid, std::size_t copies) {
  if (!period_grid.periodic() || period_grid.copies != 1)
    throw ConfigError("tile_window expects a one-period periodic grid");
  if (copies < 2) throw ConfigError("domain_copies must be >= 2");
  StripGrid g = period_grid;
  g.copies = copies;
  g.nx = copies * period_grid.nx + 1;
  g.boundary = XBoundary::Neumann;
  return g;
}

}  // namespace fieldroad
