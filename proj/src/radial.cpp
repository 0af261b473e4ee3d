#include "detmmot/radial.hpp"

#include <algorithm>
#include <cmath>

namespace detmmot {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw ContractViolation(msg);
}

constexpr double kZeroRadius = 1e-12;
constexpr int kValueQuadraturePoints = 4096;

double interp(const std::vector<double>& x, const std::vector<double>& y,
              double q, bool extend_affine) {
  if (q <= x.front()) {
    if (!extend_affine || x.size() < 2) return y.front();
    const double s = (y[1] - y[0]) / (x[1] - x[0]);
    return y.front() + s * (q - x.front());
  }
  if (q >= x.back()) {
    if (!extend_affine || x.size() < 2) return y.back();
    const std::size_t m = x.size();
    const double s = (y[m - 1] - y[m - 2]) / (x[m - 1] - x[m - 2]);
    return y.back() + s * (q - x.back());
  }
  const auto it = std::upper_bound(x.begin(), x.end(), q);
  const std::size_t k = static_cast<std::size_t>(it - x.begin()) - 1;
  const double t = (q - x[k]) / (x[k + 1] - x[k]);
  return y[k] + t * (y[k + 1] - y[k]);
}

}  // namespace

double RadialPotential::operator()(double x) const {
  if (x <= r.front()) {
    // Slopes are nonnegative, so the natural extension below the table is
    // affine with the first slope (flat when that slope is 0).
    return value.front() + slope.front() * (x - r.front());
  }
  if (x >= r.back()) {
    return value.back() + slope.back() * (x - r.back());
  }
  return interp(r, value, x, false);
}

double RadialPotential::slope_at(double x) const {
  return interp(r, slope, x, false);
}

bool RadialPotential::convex(double tol) const {
  for (std::size_t k = 0; k + 1 < slope.size(); ++k)
    if (slope[k + 1] < slope[k] - tol) return false;
  return true;
}

double RadialSolution::map(int i, double r) const {
  require(i >= 1 && i <= d, "radial solution: map index out of range");
  if (i == 1) return r;
  return maps[static_cast<std::size_t>(i - 2)](r);
}

RadialValidation RadialSolution::validate(
    const std::vector<RadialMeasure>& marginals) const {
  RadialValidation v;
  for (const auto& psi : potentials)
    if (!psi.convex()) v.convex = false;

  // Tightness along the monotone graph, on the first marginal's quantiles.
  const int m = 512;
  for (int j = 0; j < m; ++j) {
    const double u = static_cast<double>(j) / (m - 1);
    const double r1 = marginals[0].quantile(u);
    double sum = 0.0, prod = 1.0;
    for (int i = 1; i <= d; ++i) {
      const double ri = map(i, r1);
      sum += potentials[static_cast<std::size_t>(i - 1)](ri);
      prod *= ri;
    }
    v.max_tightness_gap = std::max(v.max_tightness_gap, sum - prod);
    v.max_feasibility_violation =
        std::max(v.max_feasibility_violation, prod - sum);
  }

  // Dual feasibility sum psi_i(r_i) >= prod r_i on a grid over the support
  // box. Grid resolution shrinks with d to keep the tuple count bounded.
  const int per_axis = d <= 3 ? 25 : (d == 4 ? 12 : 6);
  std::vector<double> grid_r(static_cast<std::size_t>(d) * per_axis);
  for (int i = 0; i < d; ++i)
    for (int g = 0; g < per_axis; ++g)
      grid_r[static_cast<std::size_t>(i) * per_axis + g] =
          marginals[static_cast<std::size_t>(i)].quantile(
              static_cast<double>(g) / (per_axis - 1));
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    double sum = 0.0, prod = 1.0;
    for (int i = 0; i < d; ++i) {
      const double ri = grid_r[static_cast<std::size_t>(i) * per_axis +
                               static_cast<std::size_t>(idx[i])];
      sum += potentials[static_cast<std::size_t>(i)](ri);
      prod *= ri;
    }
    v.max_feasibility_violation =
        std::max(v.max_feasibility_violation, prod - sum);
    int ax = 0;
    while (ax < d && ++idx[static_cast<std::size_t>(ax)] == per_axis) {
      idx[static_cast<std::size_t>(ax)] = 0;
      ++ax;
    }
    if (ax == d) break;
  }
  return v;
}

RadialSolution solve_radial(const std::vector<RadialMeasure>& marginals) {
  const int d = static_cast<int>(marginals.size());
  require(d >= 2 && d <= kMaxDim, "solve_radial: needs 2..8 marginals");
  for (const auto& mu : marginals)
    if (!mu.atomless())
      throw AtomicMarginalError("solve_radial: marginal has atoms");

  // Shared u-grid; Q[i][j] = quantile of marginal i at u_j.
  const int m = RadialMeasure::kDefaultKnots;
  std::vector<std::vector<double>> Q(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    auto& q = Q[static_cast<std::size_t>(i)];
    q.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
      q[static_cast<std::size_t>(j)] =
          marginals[static_cast<std::size_t>(i)].quantile(
              static_cast<double>(j) / (m - 1));
  }

  // Keep only grid rows where the pilot radii strictly increase, so every
  // knot table below is valid.
  std::vector<int> rows;
  rows.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    if (!rows.empty() && Q[0][static_cast<std::size_t>(j)] <=
                             Q[0][static_cast<std::size_t>(rows.back())])
      continue;
    rows.push_back(j);
  }

  RadialSolution sol;
  sol.d = d;
  for (int i = 1; i < d; ++i) {
    std::vector<double> r, h;
    r.reserve(rows.size());
    h.reserve(rows.size());
    double prev = -1.0;
    for (int j : rows) {
      r.push_back(Q[0][static_cast<std::size_t>(j)]);
      const double q = Q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      prev = std::max(prev, q);
      h.push_back(prev);
    }
    sol.maps.emplace_back(std::move(r), std::move(h));
  }

  // Value by midpoint quadrature in the quantile variable.
  double value = 0.0;
  for (int j = 0; j < kValueQuadraturePoints; ++j) {
    const double u = (j + 0.5) / kValueQuadraturePoints;
    const double r1 = marginals[0].quantile(u);
    double prod = r1;
    for (int i = 2; i <= d; ++i) prod *= sol.map(i, r1);
    value += prod;
  }
  sol.value = value / kValueQuadraturePoints;

  // Potentials: psi_i tabulated at x = H_i(r) with slope prod_{j!=i} H_j(r),
  // values by trapezoid integration of the slope field; psi_i(r_min) = 0 for
  // i < d and psi_d anchored so the sum is tight at the first knot.
  for (int i = 0; i < d; ++i) {
    RadialPotential psi;
    psi.r.reserve(rows.size());
    psi.value.reserve(rows.size());
    psi.slope.reserve(rows.size());
    for (int j : rows) {
      const std::size_t ju = static_cast<std::size_t>(j);
      const double xi = Q[static_cast<std::size_t>(i)][ju];
      if (!psi.r.empty() && xi <= psi.r.back()) continue;
      double s = 1.0;
      for (int k = 0; k < d; ++k)
        if (k != i) s *= Q[static_cast<std::size_t>(k)][ju];
      psi.r.push_back(xi);
      psi.slope.push_back(s);
      psi.value.push_back(0.0);
    }
    for (std::size_t k = 1; k < psi.r.size(); ++k) {
      psi.value[k] = psi.value[k - 1] +
                     0.5 * (psi.slope[k] + psi.slope[k - 1]) *
                         (psi.r[k] - psi.r[k - 1]);
    }
    sol.potentials.push_back(std::move(psi));
  }
  double prod0 = 1.0;
  for (int i = 0; i < d; ++i) prod0 *= Q[static_cast<std::size_t>(i)][0];
  for (double& v : sol.potentials.back().value) v += prod0;
  return sol;
}

CouplingSampler::CouplingSampler(std::vector<RadialMeasure> marginals,
                                 RadialSolution solution)
    : d_(static_cast<int>(marginals.size())),
      marginals_(std::move(marginals)),
      solution_(std::move(solution)) {
  require(d_ >= 2 && d_ <= kMaxDim, "sampler: needs 2..8 marginals");
  require(solution_.d == d_, "sampler: solution dimension mismatch");
}

double CouplingSampler::draw_first_radius(Rng& rng) const {
  // Radii below kZeroRadius would make the wedge closure 0/0; they form a
  // null event under atomless marginals, so resample.
  double r1 = 0.0;
  do {
    r1 = marginals_[0].quantile(rng.uniform01());
  } while (r1 < kZeroRadius);
  return r1;
}

void CouplingSampler::sample_tuple(Rng& rng, std::span<double> out) const {
  const int d = d_;
  require(static_cast<int>(out.size()) == d * d, "sample: bad output span");
  const double r1 = draw_first_radius(rng);
  std::vector<Vec> units;
  units.reserve(static_cast<std::size_t>(d - 1));
  units.push_back(random_unit_vector(d, rng));
  for (int r = 0; r < d; ++r) out[r] = r1 * units[0][static_cast<std::size_t>(r)];
  for (int i = 2; i <= d - 1; ++i) {
    Vec u = sample_subsphere(std::span<const Vec>(units), d, 1.0, rng);
    const double radius = solution_.map(i, r1);
    for (int r = 0; r < d; ++r)
      out[static_cast<std::size_t>(i - 1) * d + r] =
          radius * u[static_cast<std::size_t>(r)];
    units.push_back(std::move(u));
  }
  const Vec w = wedge(std::span<const Vec>(units));
  const double radius_d = solution_.map(d, r1);
  for (int r = 0; r < d; ++r)
    out[static_cast<std::size_t>(d - 1) * d + r] =
        radius_d * w[static_cast<std::size_t>(r)];
}

void CouplingSampler::sample_tuple_perturbed(const Vec& e, Rng& rng,
                                             std::span<double> out,
                                             PerturbedStats* stats) const {
  require(d_ == 3, "perturbed sampler: d must be 3");
  require(static_cast<int>(e.size()) == 3, "perturbed sampler: e must be in R^3");
  require(std::fabs(norm(e) - 1.0) <= 1e-12, "perturbed sampler: |e| must be 1");
  require(out.size() == 9, "sample: bad output span");
  const double r1 = draw_first_radius(rng);
  const Vec u1 = random_unit_vector(3, rng);
  // Rejection sampling on the circle orthogonal to u1: target density
  // 1 + <u,e> w.r.t. normalized arc length, envelope constant 2.
  Vec u2;
  const std::span<const Vec> frame(&u1, 1);
  for (;;) {
    u2 = sample_subsphere(frame, 3, 1.0, rng);
    if (stats) ++stats->proposals;
    const double accept_prob = 0.5 * (1.0 + dot(u2, e));
    if (rng.uniform01() < accept_prob) break;
  }
  if (stats) ++stats->accepts;
  const double h2 = solution_.map(2, r1);
  const double h3 = solution_.map(3, r1);
  const Vec units[2] = {u1, u2};
  const Vec w = wedge(std::span<const Vec>(units, 2));
  for (int r = 0; r < 3; ++r) {
    out[static_cast<std::size_t>(r)] = r1 * u1[static_cast<std::size_t>(r)];
    out[static_cast<std::size_t>(3 + r)] = h2 * u2[static_cast<std::size_t>(r)];
    out[static_cast<std::size_t>(6 + r)] = h3 * w[static_cast<std::size_t>(r)];
  }
}

void CouplingSampler::sample_tuple_mixture(double p, Rng& rng, Rng& sign_rng,
                                           std::span<double> out) const {
  require(d_ == 3, "mixture sampler: d must be 3");
  require(p >= 0.0 && p <= 1.0, "mixture sampler: p outside [0,1]");
  sample_tuple(rng, out);
  if (sign_rng.uniform01() >= p) {
    for (int r = 0; r < 3; ++r) out[static_cast<std::size_t>(6 + r)] =
        -out[static_cast<std::size_t>(6 + r)];
  }
}

std::vector<double> CouplingSampler::sample(std::int64_t n, Rng& rng) const {
  const std::size_t stride = static_cast<std::size_t>(d_) * d_;
  std::vector<double> data(static_cast<std::size_t>(n) * stride);
  for (std::int64_t i = 0; i < n; ++i)
    sample_tuple(rng, std::span<double>(data.data() + i * stride, stride));
  return data;
}

std::vector<double> CouplingSampler::sample_perturbed(
    const Vec& e, std::int64_t n, Rng& rng, PerturbedStats* stats) const {
  std::vector<double> data(static_cast<std::size_t>(n) * 9);
  for (std::int64_t i = 0; i < n; ++i)
    sample_tuple_perturbed(e, rng, std::span<double>(data.data() + i * 9, 9),
                           stats);
  return data;
}

std::vector<double> CouplingSampler::sample_mixture(double p, std::int64_t n,
                                                    Rng& rng) const {
  Rng sign_rng = rng.split();
  std::vector<double> data(static_cast<std::size_t>(n) * 9);
  for (std::int64_t i = 0; i < n; ++i)
    sample_tuple_mixture(p, rng, sign_rng,
                         std::span<double>(data.data() + i * 9, 9));
  return data;
}

std::array<Vec, 3> monge_maps_4d(const Vec& x) {
  require(x.size() == 4, "monge maps: x must be in R^4");
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3];
  return {Vec{-x2, x1, -x4, x3},   // T_2
          Vec{-x3, x4, x1, -x2},   // T_3
          Vec{-x4, -x3, x2, x1}};  // T_4
}

}  // namespace detmmot
