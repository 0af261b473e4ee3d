#include "detmmot/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace detmmot {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double det_flat(std::span<const double> flat, int d) {
  require(d >= 1 && d <= kMaxDim, "det: dimension out of range");
  require(static_cast<int>(flat.size()) == d * d, "det: wrong matrix size");
  double m[kMaxDim * kMaxDim];
  std::memcpy(m, flat.data(), sizeof(double) * flat.size());
  double result = 1.0;
  for (int k = 0; k < d; ++k) {
    int piv = k;
    double best = std::fabs(m[k + d * k]);
    for (int i = k + 1; i < d; ++i) {
      const double v = std::fabs(m[i + d * k]);
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best == 0.0) return 0.0;
    if (piv != k) {
      for (int j = k; j < d; ++j) std::swap(m[k + d * j], m[piv + d * j]);
      result = -result;
    }
    const double pivot = m[k + d * k];
    result *= pivot;
    for (int i = k + 1; i < d; ++i) {
      const double f = m[i + d * k] / pivot;
      if (f == 0.0) continue;
      for (int j = k + 1; j < d; ++j) m[i + d * j] -= f * m[k + d * j];
    }
  }
  return result;
}

double det(std::span<const Vec> columns) {
  const int d = static_cast<int>(columns.size());
  require(d >= 1 && d <= kMaxDim, "det: dimension out of range");
  double flat[kMaxDim * kMaxDim];
  for (int j = 0; j < d; ++j) {
    require(static_cast<int>(columns[j].size()) == d,
            "det: column dimension mismatch");
    for (int i = 0; i < d; ++i) flat[i + d * j] = columns[j][i];
  }
  return det_flat(std::span<const double>(flat, d * d), d);
}

Vec wedge_flat(std::span<const double> flat, int d) {
  require(d >= 2 && d <= kMaxDim, "wedge: dimension out of range");
  require(static_cast<int>(flat.size()) == d * (d - 1),
          "wedge: expected d-1 columns of dimension d");
  // Cofactor expansion along the free slot: w_k = (-1)^(k+d-1) * minor_k,
  // where minor_k drops row k of the d x (d-1) block (0-based k).
  Vec w(d);
  double minor[kMaxDim * kMaxDim];
  for (int k = 0; k < d; ++k) {
    for (int j = 0; j < d - 1; ++j) {
      int r = 0;
      for (int i = 0; i < d; ++i) {
        if (i == k) continue;
        minor[r + (d - 1) * j] = flat[i + d * j];
        ++r;
      }
    }
    const double m =
        det_flat(std::span<const double>(minor, (d - 1) * (d - 1)), d - 1);
    w[k] = (((k + d - 1) & 1) == 0) ? m : -m;
  }
  return w;
}

Vec wedge(std::span<const Vec> vectors) {
  const int d = static_cast<int>(vectors.size()) + 1;
  require(d >= 2 && d <= kMaxDim, "wedge: dimension out of range");
  double flat[kMaxDim * kMaxDim];
  for (int j = 0; j < d - 1; ++j) {
    require(static_cast<int>(vectors[j].size()) == d,
            "wedge: column dimension mismatch");
    for (int i = 0; i < d; ++i) flat[i + d * j] = vectors[j][i];
  }
  return wedge_flat(std::span<const double>(flat, d * (d - 1)), d);
}

Vec signed_wedge_excluding_flat(std::span<const double> flat, int d, int i) {
  require(d >= 2 && d <= kMaxDim, "signed_wedge: dimension out of range");
  require(static_cast<int>(flat.size()) == d * d,
          "signed_wedge: expected d columns of dimension d");
  require(i >= 0 && i < d, "signed_wedge: column index out of range");
  double rest[kMaxDim * kMaxDim];
  int c = 0;
  for (int j = 0; j < d; ++j) {
    if (j == i) continue;
    for (int r = 0; r < d; ++r) rest[r + d * c] = flat[r + d * j];
    ++c;
  }
  Vec w = wedge_flat(std::span<const double>(rest, d * (d - 1)), d);
  // Moving column i to the free slot crosses d-1-i columns, so the sign
  // making <x_i, w> = det(x_0,...,x_{d-1}) is (-1)^(d-1-i).
  if (((d - 1 - i) & 1) != 0) {
    for (double& v : w) v = -v;
  }
  return w;
}

Vec signed_wedge_excluding(std::span<const Vec> x, int i) {
  const int d = static_cast<int>(x.size());
  require(d >= 2 && d <= kMaxDim, "signed_wedge: dimension out of range");
  double flat[kMaxDim * kMaxDim];
  for (int j = 0; j < d; ++j) {
    require(static_cast<int>(x[j].size()) == d,
            "signed_wedge: column dimension mismatch");
    for (int r = 0; r < d; ++r) flat[r + d * j] = x[j][r];
  }
  return signed_wedge_excluding_flat(std::span<const double>(flat, d * d), d,
                                     i);
}

Frame make_frame(std::vector<Vec> vectors) {
  require(!vectors.empty(), "frame: needs at least one vector");
  const int dim = static_cast<int>(vectors[0].size());
  require(dim >= 2 && dim <= kMaxDim, "frame: dimension out of range");
  require(static_cast<int>(vectors.size()) <= dim,
          "frame: more vectors than dimensions");
  std::vector<double> norms(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    require(static_cast<int>(vectors[i].size()) == dim,
            "frame: inconsistent vector dimensions");
    norms[i] = norm(vectors[i]);
    for (double v : vectors[i])
      require(std::isfinite(v), "frame: non-finite coordinate");
    if (norms[i] == 0.0) throw DegenerateInput("frame: zero vector");
  }
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      const double c = std::fabs(dot(vectors[i], vectors[j])) /
                       (norms[i] * norms[j]);
      if (c > kOrthTol)
        throw ContractViolation("frame: vectors not pairwise orthogonal");
    }
  }
  return Frame{dim, std::move(vectors)};
}

namespace {

// Subtracts the projection of v onto each (orthonormal) q; two passes keep
// the residual orthogonal to working precision.
void project_out(Vec& v, const std::vector<Vec>& q) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const Vec& u : q) {
      const double c = dot(v, u);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * u[i];
    }
  }
}

}  // namespace

std::vector<Vec> complement_basis(std::span<const Vec> frame, int dim) {
  require(dim >= 1 && dim <= kMaxDim, "complement: dimension out of range");
  std::vector<Vec> q;  // orthonormalized frame, then complement vectors
  q.reserve(dim);
  for (const Vec& f : frame) {
    require(static_cast<int>(f.size()) == dim,
            "complement: frame vector dimension mismatch");
    Vec v = f;
    const double n0 = norm(v);
    if (n0 == 0.0) throw DegenerateInput("complement: zero frame vector");
    project_out(v, q);
    const double n1 = norm(v);
    if (n1 < 1e-10 * n0)
      throw DegenerateInput("complement: rank-deficient frame");
    for (double& x : v) x /= n1;
    q.push_back(std::move(v));
  }
  const int k = static_cast<int>(q.size());
  std::vector<Vec> result;
  result.reserve(dim - k);
  std::vector<bool> used(dim, false);
  for (int step = 0; step < dim - k; ++step) {
    // Pick the coordinate axis with the largest residual; deterministic and
    // immune to near-parallel choices.
    int best = -1;
    double best_norm = -1.0;
    Vec best_res;
    for (int j = 0; j < dim; ++j) {
      if (used[j]) continue;
      Vec v(dim, 0.0);
      v[j] = 1.0;
      project_out(v, q);
      const double n = norm(v);
      if (n > best_norm) {
        best_norm = n;
        best = j;
        best_res = std::move(v);
      }
    }
    if (best < 0 || best_norm < 1e-10)
      throw InternalError("complement: failed to extend basis");
    used[best] = true;
    for (double& x : best_res) x /= best_norm;
    q.push_back(best_res);
    result.push_back(std::move(best_res));
  }
  return result;
}

std::vector<Vec> complement_basis(const Frame& frame) {
  return complement_basis(std::span<const Vec>(frame.vectors), frame.dim);
}

Vec sample_subsphere(std::span<const Vec> frame, int dim, double radius,
                     Rng& rng) {
  require(radius > 0.0, "sample_subsphere: radius must be positive");
  const std::vector<Vec> basis = complement_basis(frame, dim);
  if (basis.empty())
    throw DegenerateInput("sample_subsphere: zero-dimensional complement");
  Vec out(dim, 0.0);
  double nrm = 0.0;
  Vec coeff(basis.size());
  do {
    nrm = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      coeff[i] = rng.normal();
      nrm += coeff[i] * coeff[i];
    }
    nrm = std::sqrt(nrm);
  } while (nrm < 1e-12);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double c = radius * coeff[i] / nrm;
    for (int r = 0; r < dim; ++r) out[r] += c * basis[i][r];
  }
  return out;
}

Vec sample_subsphere(const Frame& frame, double radius, Rng& rng) {
  return sample_subsphere(std::span<const Vec>(frame.vectors), frame.dim,
                          radius, rng);
}

Vec random_unit_vector(int dim, Rng& rng) {
  require(dim >= 1 && dim <= kMaxDim, "unit vector: dimension out of range");
  Vec v(dim);
  double n = 0.0;
  do {
    n = 0.0;
    for (int i = 0; i < dim; ++i) {
      v[i] = rng.normal();
      n += v[i] * v[i];
    }
    n = std::sqrt(n);
  } while (n < 1e-12);
  for (int i = 0; i < dim; ++i) v[i] /= n;
  return v;
}

}  // namespace detmmot
