#include "detmmot/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace detmmot {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw ContractViolation(msg);
}

std::int64_t checked_tensor_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int s : shape) {
    n *= s;
    if (n > kMaxTensorEntries)
      throw ResourceLimitError("objective tensor exceeds the size guard");
  }
  return n;
}

std::vector<int> shape_of(const std::vector<DiscreteMeasure>& marginals) {
  require(!marginals.empty(), "lp: needs at least one marginal");
  std::vector<int> shape;
  shape.reserve(marginals.size());
  for (const auto& mu : marginals) shape.push_back(static_cast<int>(mu.size()));
  return shape;
}

}  // namespace

std::vector<int> CostTensor::unflatten(std::int64_t flat) const {
  std::vector<int> idx(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) {
    idx[i] = static_cast<int>(flat % shape[i]);
    flat /= shape[i];
  }
  return idx;
}

std::int64_t CostTensor::flatten(std::span<const int> idx) const {
  std::int64_t flat = 0;
  for (std::size_t i = shape.size(); i-- > 0;)
    flat = flat * shape[i] + idx[i];
  return flat;
}

CostTensor make_cost(const std::vector<DiscreteMeasure>& marginals,
                     const std::function<double(std::span<const Vec>)>& fn,
                     int threads) {
  const int d = static_cast<int>(marginals.size());
  const int dim = marginals[0].dim;
  for (const auto& mu : marginals)
    require(mu.dim == dim, "lp: marginal dimension mismatch");
  CostTensor cost;
  cost.shape = shape_of(marginals);
  const std::int64_t n = checked_tensor_size(cost.shape);
  cost.values.resize(static_cast<std::size_t>(n));

  int workers = threads > 0 ? threads
                            : static_cast<int>(std::min<unsigned>(
                                  8, std::max<unsigned>(
                                         1, std::thread::hardware_concurrency())));
  workers = static_cast<int>(std::min<std::int64_t>(workers, (n + 4095) / 4096));

  auto fill = [&](std::int64_t begin, std::int64_t end) {
    std::vector<Vec> tuple(static_cast<std::size_t>(d));
    std::vector<int> idx(static_cast<std::size_t>(d));
    std::int64_t f = begin;
    for (int i = 0; i < d; ++i) {
      idx[static_cast<std::size_t>(i)] = static_cast<int>(f % cost.shape[i]);
      f /= cost.shape[i];
    }
    for (std::int64_t j = begin; j < end; ++j) {
      for (int i = 0; i < d; ++i)
        tuple[static_cast<std::size_t>(i)] =
            marginals[static_cast<std::size_t>(i)]
                .atoms[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      cost.values[static_cast<std::size_t>(j)] =
          fn(std::span<const Vec>(tuple));
      int ax = 0;
      while (ax < d && ++idx[static_cast<std::size_t>(ax)] == cost.shape[ax]) {
        idx[static_cast<std::size_t>(ax)] = 0;
        ++ax;
      }
    }
  };

  if (workers <= 1) {
    fill(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::int64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const std::int64_t b = w * chunk;
      const std::int64_t e = std::min<std::int64_t>(n, b + chunk);
      if (b >= e) break;
      pool.emplace_back(fill, b, e);
    }
    for (auto& t : pool) t.join();
  }
  return cost;
}

CostTensor make_det_cost(const std::vector<DiscreteMeasure>& marginals,
                         Objective objective, int threads) {
  const int d = static_cast<int>(marginals.size());
  require(marginals[0].dim == d,
          "det objective: needs d marginals on R^d");
  const bool abs = objective == Objective::AbsDet;
  return make_cost(
      marginals,
      [abs](std::span<const Vec> tuple) {
        const double v = det(tuple);
        return abs ? std::fabs(v) : v;
      },
      threads);
}

double Coupling::max_marginal_violation(
    const std::vector<DiscreteMeasure>& marginals) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    std::vector<double> sums(static_cast<std::size_t>(shape[i]), 0.0);
    for (const Entry& e : entries)
      sums[static_cast<std::size_t>(e.index[i])] += e.mass;
    for (std::size_t j = 0; j < sums.size(); ++j)
      worst = std::max(worst, std::fabs(sums[j] - marginals[i].weights[j]));
  }
  return worst;
}

double feasibility_violation(const PotentialSet& potentials,
                             const CostTensor& cost) {
  const int d = static_cast<int>(cost.shape.size());
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  double worst = -std::numeric_limits<double>::infinity();
  const std::int64_t n = cost.size();
  double partial = 0.0;
  for (int i = 1; i < d; ++i) partial += potentials.tables[static_cast<std::size_t>(i)][0];
  const auto& t0 = potentials.tables[0];
  std::int64_t j = 0;
  while (j < n) {
    for (int j0 = 0; j0 < cost.shape[0]; ++j0, ++j)
      worst = std::max(worst, cost.values[static_cast<std::size_t>(j)] -
                                  partial - t0[static_cast<std::size_t>(j0)]);
    int ax = 1;
    while (ax < d && ++idx[static_cast<std::size_t>(ax)] == cost.shape[ax]) {
      idx[static_cast<std::size_t>(ax)] = 0;
      ++ax;
    }
    if (ax == d) break;
    partial = 0.0;
    for (int i = 1; i < d; ++i)
      partial += potentials.tables[static_cast<std::size_t>(i)]
                                  [static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
  }
  return worst;
}

double dual_value(const PotentialSet& potentials,
                  const std::vector<DiscreteMeasure>& marginals) {
  double v = 0.0;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    const auto& t = potentials.tables[i];
    const auto& w = marginals[i].weights;
    require(t.size() == w.size(), "dual value: table/weights size mismatch");
    for (std::size_t j = 0; j < t.size(); ++j) v += t[j] * w[j];
  }
  return v;
}

PotentialSet normalize(const PotentialSet& potentials) {
  PotentialSet out = potentials;
  const std::size_t d = out.tables.size();
  double total_shift = 0.0;
  for (std::size_t i = 0; i + 1 < d; ++i) {
    const double m = *std::min_element(out.tables[i].begin(), out.tables[i].end());
    for (double& v : out.tables[i]) v -= m;
    total_shift += m;
  }
  for (double& v : out.tables[d - 1]) v += total_shift;
  return out;
}

double duality_gap(const SolveReport& report) {
  const double gap = report.dual_value - report.primal_value;
  if (gap < -1e-9 * (1.0 + std::fabs(report.primal_value)))
    throw InternalError("duality gap is negative beyond tolerance");
  return gap;
}

PotentialSet convexify(const PotentialSet& potentials,
                       const std::vector<DiscreteMeasure>& marginals,
                       const CostTensor& cost,
                       std::span<const int> sweep_order) {
  const int d = static_cast<int>(cost.shape.size());
  PotentialSet out = potentials;
  require(static_cast<int>(out.tables.size()) == d,
          "convexify: wrong number of tables");
  for (int i = 0; i < d; ++i)
    require(static_cast<int>(out.tables[static_cast<std::size_t>(i)].size()) ==
                cost.shape[i],
            "convexify: table size mismatch");
  std::vector<int> order(sweep_order.begin(), sweep_order.end());
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
  }
  const std::int64_t n = cost.size();
  std::vector<int> idx(static_cast<std::size_t>(d));
  for (int axis : order) {
    require(axis >= 0 && axis < d, "convexify: sweep index out of range");
    std::vector<double> fresh(static_cast<std::size_t>(cost.shape[axis]),
                              -std::numeric_limits<double>::infinity());
    std::fill(idx.begin(), idx.end(), 0);
    for (std::int64_t j = 0; j < n; ++j) {
      double others = 0.0;
      for (int i = 0; i < d; ++i)
        if (i != axis)
          others += out.tables[static_cast<std::size_t>(i)]
                              [static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      const std::size_t slot =
          static_cast<std::size_t>(idx[static_cast<std::size_t>(axis)]);
      fresh[slot] = std::max(fresh[slot],
                             cost.values[static_cast<std::size_t>(j)] - others);
      int ax = 0;
      while (ax < d && ++idx[static_cast<std::size_t>(ax)] == cost.shape[ax]) {
        idx[static_cast<std::size_t>(ax)] = 0;
        ++ax;
      }
    }
    out.tables[static_cast<std::size_t>(axis)] = std::move(fresh);
  }
  (void)marginals;
  return out;
}

PotentialSet convexify(const PotentialSet& potentials,
                       const std::vector<DiscreteMeasure>& marginals,
                       Objective objective, std::span<const int> sweep_order) {
  return convexify(potentials, marginals, make_det_cost(marginals, objective),
                   sweep_order);
}

// ---------------------------------------------------------------------------
// Revised simplex on the transportation polytope.
//
// Rows: all of axis 0, axes >= 1 with their last index dropped (those
// constraints are redundant; dropping them fixes their dual price to 0).
// The initial basis is the monotone lattice path of the greedy north-west
// rule, which is triangular with respect to the kept rows.
// ---------------------------------------------------------------------------
namespace {

class TransportSimplex {
 public:
  TransportSimplex(const std::vector<DiscreteMeasure>& marginals,
                   const CostTensor& cost)
      : marginals_(marginals), cost_(cost), d_(static_cast<int>(cost.shape.size())) {
    shape_ = cost.shape;
    row_base_.resize(static_cast<std::size_t>(d_));
    row_base_[0] = 0;
    rows_ = shape_[0];
    for (int i = 1; i < d_; ++i) {
      row_base_[static_cast<std::size_t>(i)] = rows_;
      rows_ += shape_[static_cast<std::size_t>(i)] - 1;
    }
    if (rows_ > kMaxSimplexRows)
      throw ResourceLimitError("simplex row count exceeds the guard");
    b_.assign(static_cast<std::size_t>(rows_), 0.0);
    for (int j = 0; j < shape_[0]; ++j)
      b_[static_cast<std::size_t>(j)] = marginals[0].weights[static_cast<std::size_t>(j)];
    for (int i = 1; i < d_; ++i)
      for (int j = 0; j + 1 < shape_[static_cast<std::size_t>(i)]; ++j)
        b_[static_cast<std::size_t>(row_base_[static_cast<std::size_t>(i)] + j)] =
            marginals[static_cast<std::size_t>(i)].weights[static_cast<std::size_t>(j)];
    cost_scale_ = 1.0;
    for (double c : cost.values) cost_scale_ = std::max(cost_scale_, std::fabs(c));
    enter_tol_ = 1e-10 * cost_scale_;
  }

  SolveReport solve() {
    initial_basis();
    factorize();
    compute_prices();

    const std::int64_t max_pivots = 400'000;
    int degenerate_streak = 0;
    bool bland = false;
    while (true) {
      const std::int64_t entering = price(bland);
      if (entering < 0) break;
      if (pivots_ >= max_pivots)
        throw InternalError("simplex exceeded the pivot cap");
      const double step = pivot(entering);
      ++pivots_;
      if (step <= 1e-13) {
        if (++degenerate_streak > 64) bland = true;
      } else {
        degenerate_streak = 0;
        bland = false;
      }
      if (pivots_ % 512 == 0) {
        factorize();
      }
      compute_prices();
    }
    factorize();
    compute_prices();
    return report();
  }

 private:
  // Rows hit by column J, written into rows[0..k); returns k.
  int column_rows(std::int64_t flat, int* rows_out) const {
    int k = 0;
    for (int i = 0; i < d_; ++i) {
      const int ji = static_cast<int>(flat % shape_[static_cast<std::size_t>(i)]);
      flat /= shape_[static_cast<std::size_t>(i)];
      if (i == 0) {
        rows_out[k++] = ji;
      } else if (ji + 1 < shape_[static_cast<std::size_t>(i)]) {
        rows_out[k++] = row_base_[static_cast<std::size_t>(i)] + ji;
      }
    }
    return k;
  }

  void initial_basis() {
    std::vector<std::vector<double>> rem(static_cast<std::size_t>(d_));
    for (int i = 0; i < d_; ++i)
      rem[static_cast<std::size_t>(i)] = marginals_[static_cast<std::size_t>(i)].weights;
    std::vector<int> j(static_cast<std::size_t>(d_), 0);
    basic_.clear();
    x_.clear();
    while (true) {
      double m = std::numeric_limits<double>::infinity();
      for (int i = 0; i < d_; ++i)
        m = std::min(m, rem[static_cast<std::size_t>(i)]
                            [static_cast<std::size_t>(j[static_cast<std::size_t>(i)])]);
      m = std::max(m, 0.0);
      std::int64_t flat = 0;
      for (int i = d_ - 1; i >= 0; --i)
        flat = flat * shape_[static_cast<std::size_t>(i)] + j[static_cast<std::size_t>(i)];
      basic_.push_back(flat);
      x_.push_back(m);
      for (int i = 0; i < d_; ++i)
        rem[static_cast<std::size_t>(i)]
           [static_cast<std::size_t>(j[static_cast<std::size_t>(i)])] -= m;
      bool terminal = true;
      for (int i = 0; i < d_; ++i)
        if (j[static_cast<std::size_t>(i)] + 1 < shape_[static_cast<std::size_t>(i)])
          terminal = false;
      if (terminal) break;
      int advance = -1;
      for (int i = 0; i < d_; ++i) {
        const double r = rem[static_cast<std::size_t>(i)]
                            [static_cast<std::size_t>(j[static_cast<std::size_t>(i)])];
        if (r <= 1e-15 && j[static_cast<std::size_t>(i)] + 1 <
                              shape_[static_cast<std::size_t>(i)]) {
          advance = i;
          break;
        }
      }
      if (advance < 0) {
        // Remaining mass is zero everywhere; walk any open axis to the end.
        for (int i = 0; i < d_; ++i)
          if (j[static_cast<std::size_t>(i)] + 1 < shape_[static_cast<std::size_t>(i)]) {
            advance = i;
            break;
          }
      }
      ++j[static_cast<std::size_t>(advance)];
    }
    if (static_cast<int>(basic_.size()) != rows_)
      throw InternalError("simplex: initial basis has wrong size");
    in_basis_.assign(cost_.values.size(), 0);
    for (std::int64_t v : basic_) in_basis_[static_cast<std::size_t>(v)] = 1;
  }

  void factorize() {
    const int r = rows_;
    // Gauss-Jordan inverse of the basis matrix.
    std::vector<double> a(static_cast<std::size_t>(r) * r, 0.0);
    binv_.assign(static_cast<std::size_t>(r) * r, 0.0);
    int rows_hit[kMaxDim];
    for (int col = 0; col < r; ++col) {
      const int k = column_rows(basic_[static_cast<std::size_t>(col)], rows_hit);
      for (int t = 0; t < k; ++t)
        a[static_cast<std::size_t>(rows_hit[t]) * r + col] = 1.0;
      binv_[static_cast<std::size_t>(col) * r + col] = 1.0;
    }
    for (int c = 0; c < r; ++c) {
      int piv = -1;
      double best = 0.0;
      for (int i = c; i < r; ++i) {
        const double v = std::fabs(a[static_cast<std::size_t>(i) * r + c]);
        if (v > best) {
          best = v;
          piv = i;
        }
      }
      if (piv < 0 || best < 1e-12)
        throw InternalError("simplex: singular basis");
      if (piv != c) {
        for (int j2 = 0; j2 < r; ++j2) {
          std::swap(a[static_cast<std::size_t>(piv) * r + j2],
                    a[static_cast<std::size_t>(c) * r + j2]);
          std::swap(binv_[static_cast<std::size_t>(piv) * r + j2],
                    binv_[static_cast<std::size_t>(c) * r + j2]);
        }
      }
      const double inv = 1.0 / a[static_cast<std::size_t>(c) * r + c];
      for (int j2 = 0; j2 < r; ++j2) {
        a[static_cast<std::size_t>(c) * r + j2] *= inv;
        binv_[static_cast<std::size_t>(c) * r + j2] *= inv;
      }
      for (int i = 0; i < r; ++i) {
        if (i == c) continue;
        const double f = a[static_cast<std::size_t>(i) * r + c];
        if (f == 0.0) continue;
        for (int j2 = 0; j2 < r; ++j2) {
          a[static_cast<std::size_t>(i) * r + j2] -=
              f * a[static_cast<std::size_t>(c) * r + j2];
          binv_[static_cast<std::size_t>(i) * r + j2] -=
              f * binv_[static_cast<std::size_t>(c) * r + j2];
        }
      }
    }
    // Refresh the basic values from the factorization.
    x_.assign(static_cast<std::size_t>(r), 0.0);
    for (int i = 0; i < r; ++i) {
      double s = 0.0;
      for (int j2 = 0; j2 < r; ++j2)
        s += binv_[static_cast<std::size_t>(i) * r + j2] * b_[static_cast<std::size_t>(j2)];
      x_[static_cast<std::size_t>(i)] = s;
    }
  }

  void compute_prices() {
    const int r = rows_;
    y_.assign(static_cast<std::size_t>(r), 0.0);
    for (int k = 0; k < r; ++k) {
      const double ck = cost_.values[static_cast<std::size_t>(basic_[static_cast<std::size_t>(k)])];
      if (ck == 0.0) continue;
      const double* row = &binv_[static_cast<std::size_t>(k) * r];
      for (int j2 = 0; j2 < r; ++j2) y_[static_cast<std::size_t>(j2)] += ck * row[j2];
    }
    // Per-axis price lookups (dropped rows price at 0).
    axis_price_.assign(static_cast<std::size_t>(d_), {});
    for (int i = 0; i < d_; ++i) {
      auto& ap = axis_price_[static_cast<std::size_t>(i)];
      ap.assign(static_cast<std::size_t>(shape_[static_cast<std::size_t>(i)]), 0.0);
      const int count = i == 0 ? shape_[0] : shape_[static_cast<std::size_t>(i)] - 1;
      for (int j2 = 0; j2 < count; ++j2)
        ap[static_cast<std::size_t>(j2)] =
            y_[static_cast<std::size_t>(row_base_[static_cast<std::size_t>(i)] + j2)];
    }
  }

  // Entering column: Dantzig (largest reduced cost) normally, Bland
  // (smallest index with positive reduced cost) while breaking a
  // degenerate stall. Returns -1 at optimality.
  std::int64_t price(bool bland) const {
    const std::int64_t n = cost_.size();
    const auto& ap0 = axis_price_[0];
    std::vector<int> idx(static_cast<std::size_t>(d_), 0);
    std::int64_t best = -1;
    double best_rc = enter_tol_;
    std::int64_t j = 0;
    while (j < n) {
      double others = 0.0;
      for (int i = 1; i < d_; ++i)
        others += axis_price_[static_cast<std::size_t>(i)]
                             [static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      const double* c = &cost_.values[static_cast<std::size_t>(j)];
      const int n0 = shape_[0];
      for (int j0 = 0; j0 < n0; ++j0) {
        const double rc = c[j0] - others - ap0[static_cast<std::size_t>(j0)];
        if (rc > best_rc) {
          if (bland) return j + j0;
          best_rc = rc;
          best = j + j0;
        }
      }
      j += n0;
      int ax = 1;
      while (ax < d_ && ++idx[static_cast<std::size_t>(ax)] ==
                            shape_[static_cast<std::size_t>(ax)]) {
        idx[static_cast<std::size_t>(ax)] = 0;
        ++ax;
      }
      if (ax == d_) break;
    }
    return best;
  }

  // Ratio test + basis exchange; returns the step length.
  double pivot(std::int64_t entering) {
    const int r = rows_;
    int rows_hit[kMaxDim];
    const int k = column_rows(entering, rows_hit);
    dir_.assign(static_cast<std::size_t>(r), 0.0);
    for (int i = 0; i < r; ++i) {
      double s = 0.0;
      const double* row = &binv_[static_cast<std::size_t>(i) * r];
      for (int t = 0; t < k; ++t) s += row[rows_hit[t]];
      dir_[static_cast<std::size_t>(i)] = s;
    }
    int leave = -1;
    double theta = std::numeric_limits<double>::infinity();
    for (int i = 0; i < r; ++i) {
      const double di = dir_[static_cast<std::size_t>(i)];
      if (di > 1e-11) {
        const double ratio = std::max(x_[static_cast<std::size_t>(i)], 0.0) / di;
        if (ratio < theta - 1e-15 ||
            (ratio < theta + 1e-15 &&
             (leave < 0 || basic_[static_cast<std::size_t>(i)] <
                               basic_[static_cast<std::size_t>(leave)]))) {
          theta = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw InternalError("simplex: unbounded direction");
    const double dl = dir_[static_cast<std::size_t>(leave)];
    for (int i = 0; i < r; ++i)
      x_[static_cast<std::size_t>(i)] -= theta * dir_[static_cast<std::size_t>(i)];
    x_[static_cast<std::size_t>(leave)] = theta;
    in_basis_[static_cast<std::size_t>(basic_[static_cast<std::size_t>(leave)])] = 0;
    in_basis_[static_cast<std::size_t>(entering)] = 1;
    basic_[static_cast<std::size_t>(leave)] = entering;
    double* lrow = &binv_[static_cast<std::size_t>(leave) * r];
    for (int j2 = 0; j2 < r; ++j2) lrow[j2] /= dl;
    for (int i = 0; i < r; ++i) {
      if (i == leave) continue;
      const double f = dir_[static_cast<std::size_t>(i)];
      if (f == 0.0) continue;
      double* row = &binv_[static_cast<std::size_t>(i) * r];
      for (int j2 = 0; j2 < r; ++j2) row[j2] -= f * lrow[j2];
    }
    return theta;
  }

  SolveReport report() {
    SolveReport rep;
    rep.pivots = pivots_;
    double primal = 0.0;
    std::vector<std::pair<std::int64_t, double>> nz;
    for (std::size_t i = 0; i < basic_.size(); ++i) {
      double v = x_[i];
      if (v < -1e-9) throw InternalError("simplex: negative basic value");
      primal += cost_.values[static_cast<std::size_t>(basic_[i])] * v;
      if (v > 1e-12) nz.emplace_back(basic_[i], v);
    }
    std::sort(nz.begin(), nz.end());
    rep.plan.shape = shape_;
    rep.plan.entries.reserve(nz.size());
    for (const auto& [flat, mass] : nz)
      rep.plan.entries.push_back({cost_.unflatten(flat), mass});
    rep.potentials.tables.resize(static_cast<std::size_t>(d_));
    for (int i = 0; i < d_; ++i)
      rep.potentials.tables[static_cast<std::size_t>(i)] =
          axis_price_[static_cast<std::size_t>(i)];
    rep.primal_value = primal;
    rep.dual_value = dual_value(rep.potentials, marginals_);
    rep.gap = rep.dual_value - rep.primal_value;
    return rep;
  }

  const std::vector<DiscreteMeasure>& marginals_;
  const CostTensor& cost_;
  int d_ = 0;
  int rows_ = 0;
  std::vector<int> shape_;
  std::vector<int> row_base_;
  std::vector<double> b_;
  std::vector<std::int64_t> basic_;
  std::vector<double> x_;
  std::vector<double> binv_;
  std::vector<double> y_;
  std::vector<double> dir_;
  std::vector<std::vector<double>> axis_price_;
  std::vector<std::uint8_t> in_basis_;
  double cost_scale_ = 1.0;
  double enter_tol_ = 1e-10;
  std::int64_t pivots_ = 0;
};

}  // namespace

SolveReport solve_with_cost(const std::vector<DiscreteMeasure>& marginals,
                            const CostTensor& cost) {
  require(cost.shape == shape_of(marginals),
          "solve: cost tensor shape does not match the marginals");
  TransportSimplex simplex(marginals, cost);
  return simplex.solve();
}

SolveReport solve_primal(const std::vector<DiscreteMeasure>& marginals,
                         Objective objective, int threads) {
  const CostTensor cost = make_det_cost(marginals, objective, threads);
  return solve_with_cost(marginals, cost);
}

std::vector<DiscreteMeasure> discretize_radial_instance(
    const std::vector<RadialMeasure>& marginals, int n_radii, int n_dirs,
    Rng& rng) {
  const int d = static_cast<int>(marginals.size());
  require(d >= 2 && d <= kMaxDim, "discretize: needs 2..8 marginals");
  require(n_radii >= 1 && n_dirs >= 1, "discretize: counts must be positive");
  const std::int64_t per_axis = static_cast<std::int64_t>(n_radii) * n_dirs;
  std::int64_t total = 1;
  for (int i = 0; i < d; ++i) {
    total *= per_axis;
    if (total > kMaxTensorEntries)
      throw ResourceLimitError("discretize: instance exceeds the size guard");
  }

  std::vector<Vec> dirs;
  dirs.reserve(static_cast<std::size_t>(n_dirs));
  if (d == 2) {
    for (int k = 0; k < n_dirs; ++k) {
      const double a = 2.0 * M_PI * k / n_dirs;
      dirs.push_back(Vec{std::cos(a), std::sin(a)});
    }
  } else if (d == 3) {
    // Fibonacci lattice: deterministic, quasi-uniform.
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n_dirs; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / n_dirs;
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * k;
      dirs.push_back(Vec{s * std::cos(a), s * std::sin(a), z});
    }
  } else {
    for (int k = 0; k < n_dirs; ++k) dirs.push_back(random_unit_vector(d, rng));
  }

  std::vector<DiscreteMeasure> out;
  out.reserve(static_cast<std::size_t>(d));
  const double w = 1.0 / static_cast<double>(per_axis);
  for (int i = 0; i < d; ++i) {
    std::vector<Vec> atoms;
    std::vector<double> weights;
    atoms.reserve(static_cast<std::size_t>(per_axis));
    weights.assign(static_cast<std::size_t>(per_axis), w);
    for (int k = 0; k < n_radii; ++k) {
      const double u = (k + 0.5) / n_radii;
      const double r = marginals[static_cast<std::size_t>(i)].quantile(u);
      for (const Vec& dir : dirs) {
        Vec a(static_cast<std::size_t>(d));
        for (int c = 0; c < d; ++c) a[static_cast<std::size_t>(c)] = r * dir[static_cast<std::size_t>(c)];
        atoms.push_back(std::move(a));
      }
    }
    // Uniform weights sum to 1 up to rounding; renormalize exactly.
    const double total_w = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& ww : weights) ww /= total_w;
    out.push_back(make_discrete(std::move(atoms), std::move(weights)));
  }
  return out;
}

}  // namespace detmmot
