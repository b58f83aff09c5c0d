#pragma once
/// @file grid.hpp
/// @brief Periodic-box grid: uniform nodes, integer wavevector bookkeeping,
///        two-thirds dealiasing cutoff.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "nsv/errors.hpp"

namespace nsv {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Uniform periodic grid on a d-dimensional box, d = 2 or 3, with the same
/// power-of-two point count per axis.  Nodes are x_i = i*h per axis; fields
/// are stored row-major with the last axis fastest.
struct Grid {
  int dim = 2;
  int n = 0;                                   // points per axis
  std::array<double, 3> length = {kTwoPi, kTwoPi, kTwoPi};

  Grid() = default;
  Grid(int dim_, int n_, double len = kTwoPi) : dim(dim_), n(n_) {
    if (dim < 2 || dim > 3) throw contract_error("Grid: dim must be 2 or 3");
    if (n < 8 || (n & (n - 1)) != 0)
      throw contract_error("Grid: points per axis must be a power of two >= 8");
    length = {len, len, len};
  }

  std::int64_t size() const {
    std::int64_t s = 1;
    for (int a = 0; a < dim; ++a) s *= n;
    return s;
  }

  double spacing(int axis) const { return length[axis] / n; }
  double min_spacing() const {
    double h = spacing(0);
    for (int a = 1; a < dim; ++a) h = std::min(h, spacing(a));
    return h;
  }
  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= length[a];
    return v;
  }

  /// Integer frequency of a storage index along one axis, in [-n/2, n/2).
  int freq(int idx) const { return idx < n / 2 ? idx : idx - n; }

  /// Physical wavenumber component for an integer frequency.
  double wavenumber(int m, int axis) const { return kTwoPi * m / length[axis]; }

  /// Largest integer frequency kept by the two-thirds rule.
  int dealias_cutoff() const { return n / 3; }

  std::int64_t flat(int i0, int i1, int i2 = 0) const {
    return dim == 2 ? std::int64_t(i0) * n + i1
                    : (std::int64_t(i0) * n + i1) * n + i2;
  }

  bool operator==(const Grid& o) const {
    return dim == o.dim && n == o.n && length == o.length;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (a != b)
    throw contract_error(std::string(where) + ": fields live on different grids");
}

}  // namespace nsv
