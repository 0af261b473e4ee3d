#include "detmmot/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace detmmot {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace

DiscreteMeasure make_discrete(std::vector<Vec> atoms,
                              std::vector<double> weights) {
  require(!atoms.empty(), "discrete measure: needs at least one atom");
  require(atoms.size() == weights.size(),
          "discrete measure: atoms/weights size mismatch");
  const int dim = static_cast<int>(atoms[0].size());
  require(dim >= 2 && dim <= kMaxDim,
          "discrete measure: dimension out of range");
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    require(static_cast<int>(atoms[i].size()) == dim,
            "discrete measure: inconsistent atom dimensions");
    for (double c : atoms[i])
      require(std::isfinite(c), "discrete measure: non-finite coordinate");
    require(weights[i] >= 0.0, "discrete measure: negative weight");
    total += weights[i];
  }
  require(std::fabs(total - 1.0) <= 1e-12,
          "discrete measure: weights must sum to 1");
  return DiscreteMeasure{dim, std::move(atoms), std::move(weights)};
}

RadialMeasure RadialMeasure::from_quantile_table(std::vector<double> u,
                                                 std::vector<double> r) {
  bool strictly_increasing = true;
  for (std::size_t k = 0; k + 1 < r.size(); ++k) {
    if (r[k + 1] <= r[k]) {
      strictly_increasing = false;
      break;
    }
  }
  return from_quantile_table(std::move(u), std::move(r), strictly_increasing);
}

RadialMeasure RadialMeasure::from_quantile_table(std::vector<double> u,
                                                 std::vector<double> r,
                                                 bool atomless) {
  require(u.size() == r.size() && u.size() >= 2,
          "radial measure: needs matching u/r tables with >= 2 knots");
  require(u.front() == 0.0 && u.back() == 1.0,
          "radial measure: u-knots must span [0,1]");
  for (std::size_t k = 0; k < u.size(); ++k) {
    require(std::isfinite(u[k]) && std::isfinite(r[k]),
            "radial measure: non-finite knot");
    if (k > 0) {
      require(u[k] >= u[k - 1], "radial measure: u-knots must be sorted");
      require(r[k] >= r[k - 1], "radial measure: quantile must be nondecreasing");
    }
  }
  require(r.front() >= 0.0, "radial measure: quantile(0) must be >= 0");
  if (atomless) {
    for (std::size_t k = 0; k + 1 < r.size(); ++k) {
      require(r[k + 1] > r[k],
              "radial measure: atomless flag needs a strictly increasing table");
    }
  }
  RadialMeasure m;
  m.u_ = std::move(u);
  m.r_ = std::move(r);
  m.atomless_ = atomless;
  return m;
}

double RadialMeasure::quantile(double u) const {
  require(u >= 0.0 && u <= 1.0, "quantile: u outside [0,1]");
  // Last knot with u_k <= u; at duplicated knots this lands on the upper
  // branch of the jump.
  const auto it = std::upper_bound(u_.begin(), u_.end(), u);
  std::size_t k = static_cast<std::size_t>(it - u_.begin());
  if (k == 0) return r_.front();
  --k;
  if (k + 1 >= u_.size()) return r_.back();
  const double du = u_[k + 1] - u_[k];
  if (du <= 0.0) return r_[k];
  const double t = (u - u_[k]) / du;
  return r_[k] + t * (r_[k + 1] - r_[k]);
}

double RadialMeasure::cdf(double r) const {
  if (r < r_.front()) return 0.0;
  if (r >= r_.back()) return 1.0;
  const auto it = std::upper_bound(r_.begin(), r_.end(), r);
  std::size_t k = static_cast<std::size_t>(it - r_.begin());
  if (k == 0) return 0.0;
  --k;
  if (k + 1 >= r_.size()) return 1.0;
  const double dr = r_[k + 1] - r_[k];
  if (dr <= 0.0) return u_[k];
  const double t = (r - r_[k]) / dr;
  return u_[k] + t * (u_[k + 1] - u_[k]);
}

RadialMeasure RadialMeasure::resampled(int m) const {
  require(m >= 2, "resample: needs at least 2 knots");
  std::vector<double> u(m), r(m);
  for (int j = 0; j < m; ++j) {
    u[j] = static_cast<double>(j) / (m - 1);
    r[j] = quantile(u[j]);
  }
  return from_quantile_table(std::move(u), std::move(r), atomless_);
}

RadialMeasure uniform_ball_radial(int dim, double radius, int knots) {
  require(dim >= 1 && dim <= kMaxDim, "uniform ball: dimension out of range");
  require(radius > 0.0, "uniform ball: radius must be positive");
  std::vector<double> u(knots), r(knots);
  for (int j = 0; j < knots; ++j) {
    u[j] = static_cast<double>(j) / (knots - 1);
    r[j] = radius * std::pow(u[j], 1.0 / dim);
  }
  u.back() = 1.0;
  r.back() = radius;
  return RadialMeasure::from_quantile_table(std::move(u), std::move(r), true);
}

RadialMeasure uniform_interval_radial(double a, double b, int knots) {
  require(a >= 0.0 && b > a, "uniform interval: needs 0 <= a < b");
  std::vector<double> u(knots), r(knots);
  for (int j = 0; j < knots; ++j) {
    u[j] = static_cast<double>(j) / (knots - 1);
    r[j] = a + (b - a) * u[j];
  }
  u.back() = 1.0;
  r.back() = b;
  return RadialMeasure::from_quantile_table(std::move(u), std::move(r), true);
}

MonotoneMap::MonotoneMap(std::vector<double> r, std::vector<double> h)
    : r_(std::move(r)), h_(std::move(h)) {
  require(r_.size() == h_.size() && r_.size() >= 2,
          "monotone map: needs matching tables with >= 2 knots");
  for (std::size_t k = 0; k < r_.size(); ++k) {
    require(std::isfinite(r_[k]) && std::isfinite(h_[k]),
            "monotone map: non-finite knot");
    require(h_[k] >= 0.0, "monotone map: values must be >= 0");
    if (k > 0) {
      require(r_[k] > r_[k - 1], "monotone map: knots must be increasing");
      require(h_[k] >= h_[k - 1], "monotone map: values must be nondecreasing");
    }
  }
}

MonotoneMap MonotoneMap::identity(double r_min, double r_max) {
  return MonotoneMap({r_min, r_max}, {r_min, r_max});
}

double MonotoneMap::operator()(double r) const {
  if (r <= r_.front()) return h_.front();
  if (r >= r_.back()) return h_.back();
  const auto it = std::upper_bound(r_.begin(), r_.end(), r);
  const std::size_t k = static_cast<std::size_t>(it - r_.begin()) - 1;
  const double t = (r - r_[k]) / (r_[k + 1] - r_[k]);
  return h_[k] + t * (h_[k + 1] - h_[k]);
}

RadialMeasure radial_projection(const DiscreteMeasure& mu) {
  const std::size_t n = mu.size();
  std::vector<std::pair<double, double>> rw(n);  // (radius, weight)
  for (std::size_t i = 0; i < n; ++i)
    rw[i] = {norm(mu.atoms[i]), mu.weights[i]};
  std::sort(rw.begin(), rw.end());
  // Merge radii that coincide within 1e-12.
  std::vector<double> radii;
  std::vector<double> weights;
  for (const auto& [r, w] : rw) {
    if (!radii.empty() && r - radii.back() <= 1e-12) {
      weights.back() += w;
    } else {
      radii.push_back(r);
      weights.push_back(w);
    }
  }
  // Exact step quantile of the projected atomic law: each distinct radius is
  // flat over its cumulative-weight band, duplicated u-knots encode jumps.
  std::vector<double> u, r;
  u.push_back(0.0);
  r.push_back(radii.front());
  double cum = 0.0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    cum += weights[k];
    const double top = (k + 1 == radii.size()) ? 1.0 : cum;
    u.push_back(top);
    r.push_back(radii[k]);
    if (k + 1 < radii.size()) {
      u.push_back(top);
      r.push_back(radii[k + 1]);
    }
  }
  return RadialMeasure::from_quantile_table(std::move(u), std::move(r), false);
}

MonotoneMap monotone_rearrangement(const RadialMeasure& mu1,
                                   const RadialMeasure& mu2) {
  if (!mu1.atomless())
    throw AtomicMarginalError(
        "monotone rearrangement: first marginal has atoms");
  const int m = RadialMeasure::kDefaultKnots;
  std::vector<double> r, h;
  r.reserve(m);
  h.reserve(m);
  for (int j = 0; j < m; ++j) {
    const double u = static_cast<double>(j) / (m - 1);
    const double q1 = mu1.quantile(u);
    const double q2 = mu2.quantile(u);
    if (!r.empty() && q1 <= r.back()) continue;  // collapse numerically flat steps
    r.push_back(q1);
    h.push_back(h.empty() ? q2 : std::max(q2, h.back()));
  }
  return MonotoneMap(std::move(r), std::move(h));
}

double pushforward_check(const MonotoneMap& map, const RadialMeasure& mu1,
                         const RadialMeasure& mu2) {
  double sup = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double u = static_cast<double>(i) / 1000.0;
    const double diff = std::fabs(mu2.quantile(u) - map(mu1.quantile(u)));
    sup = std::max(sup, diff);
  }
  return sup;
}

}  // namespace detmmot
