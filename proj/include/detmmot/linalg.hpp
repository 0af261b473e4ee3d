#pragma once

#include <span>
#include <vector>

#include "detmmot/common.hpp"
#include "detmmot/rng.hpp"

namespace detmmot {

using Vec = std::vector<double>;

// Dense dimension ceiling; everything here is cofactor/LU-grade small.
inline constexpr int kMaxDim = 8;

// Frame orthogonality tolerance (absolute, on unit-normalized vectors).
inline constexpr double kOrthTol = 1e-8;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

// Determinant of the d x d matrix whose columns are `columns`, by LU with
// partial pivoting. Sign follows column order.
double det(std::span<const Vec> columns);

// Same, matrix stored column-major in `flat` (flat[i + d*j] = row i, col j).
double det_flat(std::span<const double> flat, int d);

// The vector w characterized by det(v_1,...,v_{d-1}, x) = <x, w> for all x,
// computed by cofactor expansion along the free (last) slot. Requires
// exactly d-1 vectors of dimension d.
Vec wedge(std::span<const Vec> vectors);
Vec wedge_flat(std::span<const double> flat, int d);  // (d-1) columns of dim d

// The vector w with <x[i], w> = det(x[0], ..., x[d-1]), where column i is
// excluded from the wedge (0-based) and the remaining columns are taken in
// increasing order. Equals (-1)^(d-1-i) * wedge(columns except i).
Vec signed_wedge_excluding(std::span<const Vec> x, int i);
Vec signed_wedge_excluding_flat(std::span<const double> flat, int d, int i);

// A tuple of pairwise-orthogonal nonzero vectors in R^dim.
struct Frame {
  int dim = 0;
  std::vector<Vec> vectors;
};

// Validates dimensions, nonzero norms and pairwise orthogonality (within
// kOrthTol on unit-normalized vectors).
Frame make_frame(std::vector<Vec> vectors);

// Orthonormal basis of the orthogonal complement of span(frame), by pivoted
// Gram-Schmidt with re-orthogonalization. Throws DegenerateInput if the
// frame vectors are (numerically) linearly dependent.
std::vector<Vec> complement_basis(const Frame& frame);
std::vector<Vec> complement_basis(std::span<const Vec> frame, int dim);

// Uniform point (Hausdorff measure) on the sphere of `radius` inside the
// orthogonal complement of the frame: standard Gaussian coefficients over
// complement_basis, normalized, scaled. Throws DegenerateInput when the
// complement is zero-dimensional.
Vec sample_subsphere(const Frame& frame, double radius, Rng& rng);
Vec sample_subsphere(std::span<const Vec> frame, int dim, double radius,
                     Rng& rng);

// Uniform direction on the unit sphere of R^dim.
Vec random_unit_vector(int dim, Rng& rng);

}  // namespace detmmot
