#include "detmmot/optcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace detmmot {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw ContractViolation(msg);
}

double column_norm(const SampleSet& s, std::int64_t t, int i) {
  return norm(s.column(t, i));
}

}  // namespace

CertificateReport check_tightness(const SampleSet& support,
                                  const RadialSolution& solution,
                                  double tol) {
  require(support.d == solution.d, "tightness: dimension mismatch");
  CertificateReport rep;
  const int d = support.d;
  const std::int64_t n = support.size();
  double max_gap = 0.0;
  double max_infeas = 0.0;
  std::int64_t worst_infeasible = -1;
  for (std::int64_t t = 0; t < n; ++t) {
    double sum = 0.0;
    for (int i = 0; i < d; ++i)
      sum += solution.potentials[static_cast<std::size_t>(i)](column_norm(support, t, i));
    const double dt = det_flat(support.tuple(t), d);
    const double slack = sum - dt;
    if (-slack > max_infeas) {
      max_infeas = -slack;
      worst_infeasible = t;
    }
    max_gap = std::max(max_gap, slack);
  }
  rep.max_feasibility_violation = std::max(0.0, max_infeas);
  rep.max_tightness_gap = max_gap;
  {
    ConditionRecord rec;
    rec.name = "dual_feasibility_on_support";
    rec.residual = rep.max_feasibility_violation;
    rec.tolerance = 1e-9;
    rec.passed = rep.max_feasibility_violation <= rec.tolerance;
    rec.checked = n;
    if (!rec.passed)
      rec.detail = "violating tuple index " + std::to_string(worst_infeasible);
    rep.add(std::move(rec));
  }
  {
    ConditionRecord rec;
    rec.name = "tightness";
    rec.residual = max_gap;
    rec.tolerance = tol;
    rec.passed = max_gap <= tol;
    rec.checked = n;
    rep.add(std::move(rec));
  }
  return rep;
}

CertificateReport check_tightness(const Coupling& plan,
                                  const PotentialSet& potentials,
                                  const CostTensor& cost, double tol) {
  CertificateReport rep;
  const double infeas = std::max(0.0, feasibility_violation(potentials, cost));
  rep.max_feasibility_violation = infeas;
  {
    ConditionRecord rec;
    rec.name = "dual_feasibility";
    rec.residual = infeas;
    rec.tolerance = 1e-9;
    rec.passed = infeas <= rec.tolerance;
    rec.checked = cost.size();
    rep.add(std::move(rec));
  }
  double max_gap = 0.0;
  for (const auto& e : plan.entries) {
    double sum = 0.0;
    for (std::size_t i = 0; i < potentials.tables.size(); ++i)
      sum += potentials.tables[i][static_cast<std::size_t>(e.index[i])];
    const std::int64_t flat = cost.flatten(e.index);
    max_gap = std::max(max_gap, sum - cost.at(flat));
  }
  rep.max_tightness_gap = max_gap;
  {
    ConditionRecord rec;
    rec.name = "complementary_slackness";
    rec.residual = max_gap;
    rec.tolerance = tol;
    rec.passed = max_gap <= tol;
    rec.checked = static_cast<std::int64_t>(plan.entries.size());
    rep.add(std::move(rec));
  }
  return rep;
}

namespace {

// Conjugate of the radial potential in direction w/|w|, over its knot grid:
// phi*(w) = max_k ( r_k |w| - psi(r_k) ).
double radial_conjugate(const RadialPotential& psi, double wnorm) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < psi.r.size(); ++k)
    best = std::max(best, psi.r[k] * wnorm - psi.value[k]);
  return best;
}

}  // namespace

CertificateReport check_subgradient(const SampleSet& support,
                                    const RadialSolution& solution,
                                    double tol) {
  require(support.d == solution.d, "subgradient: dimension mismatch");
  for (const auto& psi : solution.potentials)
    if (!psi.convex())
      throw ContractViolation("subgradient: potentials are not convex");
  CertificateReport rep;
  const int d = support.d;
  const std::int64_t n = support.size();
  double max_fenchel = 0.0, max_extr1 = 0.0;
  std::int64_t skipped = 0;
  for (std::int64_t t = 0; t < n; ++t) {
    bool degenerate = false;
    for (int i = 0; i < d; ++i)
      if (column_norm(support, t, i) < 1e-9) degenerate = true;
    if (degenerate) {
      ++skipped;
      continue;
    }
    const auto tuple = support.tuple(t);
    for (int i = 0; i < d; ++i) {
      const Vec w = signed_wedge_excluding_flat(tuple, d, i);
      const double wn = norm(w);
      const double pairing = dot(support.column(t, i), w);
      const double scale = std::max(1.0, std::fabs(pairing));
      const double phi_x =
          solution.potentials[static_cast<std::size_t>(i)](column_norm(support, t, i));
      const double conj =
          radial_conjugate(solution.potentials[static_cast<std::size_t>(i)], wn);
      max_fenchel = std::max(max_fenchel,
                             std::fabs(phi_x + conj - pairing) / scale);
      double others = 0.0;
      for (int j = 0; j < d; ++j)
        if (j != i)
          others += solution.potentials[static_cast<std::size_t>(j)](
              column_norm(support, t, j));
      max_extr1 = std::max(max_extr1, std::fabs(others - conj) / scale);
    }
  }
  rep.max_subgradient_residual = std::max(max_fenchel, max_extr1);
  {
    ConditionRecord rec;
    rec.name = "fenchel_equality";
    rec.residual = max_fenchel;
    rec.tolerance = tol;
    rec.passed = max_fenchel <= tol;
    rec.checked = n - skipped;
    rec.skipped = skipped;
    rep.add(std::move(rec));
  }
  {
    ConditionRecord rec;
    rec.name = "conjugate_sum_identity";
    rec.residual = max_extr1;
    rec.tolerance = tol;
    rec.passed = max_extr1 <= tol;
    rec.checked = n - skipped;
    rec.skipped = skipped;
    rep.add(std::move(rec));
  }
  return rep;
}

CertificateReport check_gradient_system_3d(const SampleSet& support,
                                           const RadialSolution& solution,
                                           double tol) {
  require(support.d == 3 && solution.d == 3, "gradient system: d must be 3");
  CertificateReport rep;
  const std::int64_t n = support.size();
  double max_res[3] = {0.0, 0.0, 0.0};
  std::int64_t skipped = 0;
  for (std::int64_t t = 0; t < n; ++t) {
    double norms[3];
    bool degenerate = false;
    for (int i = 0; i < 3; ++i) {
      norms[i] = column_norm(support, t, i);
      if (norms[i] < 1e-9) degenerate = true;
    }
    if (degenerate) {
      ++skipped;
      continue;
    }
    const auto x = support.column(t, 0);
    const auto y = support.column(t, 1);
    const auto z = support.column(t, 2);
    const Vec pairs[3][2] = {{Vec(y.begin(), y.end()), Vec(z.begin(), z.end())},
                             {Vec(x.begin(), x.end()), Vec(z.begin(), z.end())},
                             {Vec(x.begin(), x.end()), Vec(y.begin(), y.end())}};
    const double sign[3] = {1.0, -1.0, 1.0};
    const std::span<const double> cols[3] = {x, y, z};
    for (int i = 0; i < 3; ++i) {
      const Vec w = wedge(std::span<const Vec>(pairs[i], 2));
      const double s =
          solution.potentials[static_cast<std::size_t>(i)].slope_at(norms[i]);
      double res = 0.0, wn = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double g = s * cols[i][static_cast<std::size_t>(c)] / norms[i] -
                         sign[i] * w[static_cast<std::size_t>(c)];
        res += g * g;
        wn += w[static_cast<std::size_t>(c)] * w[static_cast<std::size_t>(c)];
      }
      const double scale = std::max(1.0, std::sqrt(wn));
      max_res[i] = std::max(max_res[i], std::sqrt(res) / scale);
    }
  }
  const char* names[3] = {"gradient_eq_x", "gradient_eq_y", "gradient_eq_z"};
  for (int i = 0; i < 3; ++i) {
    ConditionRecord rec;
    rec.name = names[i];
    rec.residual = max_res[i];
    rec.tolerance = tol;
    rec.passed = max_res[i] <= tol;
    rec.checked = n - skipped;
    rec.skipped = skipped;
    rep.max_subgradient_residual =
        std::max(rep.max_subgradient_residual, max_res[i]);
    rep.add(std::move(rec));
  }
  return rep;
}

// --- sphere Fubini ---------------------------------------------------------

namespace {

struct FubiniFn {
  std::string id;
  // x and y are unit vectors in R^(k+1).
  double (*eval)(std::span<const double> x, std::span<const double> y);
};

double fn_one(std::span<const double>, std::span<const double>) { return 1.0; }
double fn_dot(std::span<const double> x, std::span<const double> y) {
  return dot(x, y);
}
double fn_dot_squared(std::span<const double> x, std::span<const double> y) {
  const double v = dot(x, y);
  return v * v;
}
double fn_proj2_proj2(std::span<const double> x, std::span<const double> y) {
  return x[0] * x[0] * y[0] * y[0];
}
double fn_trig(std::span<const double> x, std::span<const double> y) {
  return std::cos(M_PI * x[0]) * std::cos(M_PI * y[1]);
}

const FubiniFn kFubiniFns[] = {
    {"one", fn_one},
    {"dot", fn_dot},
    {"dot_squared", fn_dot_squared},
    {"proj2_proj2", fn_proj2_proj2},
    {"trig", fn_trig},
};

}  // namespace

const std::vector<std::string>& fubini_catalog() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& f : kFubiniFns) v.push_back(f.id);
    return v;
  }();
  return ids;
}

FubiniResult fubini_sphere_test(int k, const std::string& fn_id,
                                std::int64_t n, Rng& rng) {
  require(k >= 2, "fubini: k must be >= 2");
  require(k + 1 <= kMaxDim, "fubini: k too large for dense dimension");
  require(n >= 1, "fubini: n must be positive");
  const FubiniFn* fn = nullptr;
  for (const auto& f : kFubiniFns)
    if (f.id == fn_id) fn = &f;
  require(fn != nullptr, "fubini: unknown test-function id");

  const int dim = k + 1;
  double mean[2] = {0.0, 0.0};
  double m2[2] = {0.0, 0.0};
  for (int side = 0; side < 2; ++side) {
    for (std::int64_t t = 0; t < n; ++t) {
      const Vec outer = random_unit_vector(dim, rng);
      const std::span<const Vec> frame(&outer, 1);
      const Vec inner = sample_subsphere(frame, dim, 1.0, rng);
      const double v = side == 0 ? fn->eval(outer, inner)
                                 : fn->eval(inner, outer);
      const double delta = v - mean[side];
      mean[side] += delta / static_cast<double>(t + 1);
      m2[side] += delta * (v - mean[side]);
    }
  }
  FubiniResult res;
  res.fn = fn_id;
  res.lhs = mean[0];
  res.rhs = mean[1];
  const double var0 = n > 1 ? m2[0] / static_cast<double>(n - 1) : 0.0;
  const double var1 = n > 1 ? m2[1] / static_cast<double>(n - 1) : 0.0;
  res.stderr_pooled = std::sqrt((var0 + var1) / static_cast<double>(n));
  res.passed = std::fabs(res.lhs - res.rhs) <= 4.0 * res.stderr_pooled;
  return res;
}

// --- marginal goodness-of-fit ----------------------------------------------

double kolmogorov_pvalue(double x) {
  if (x <= 0.0) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += (j % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

double ks_statistic(std::vector<double> values, const RadialMeasure& law) {
  require(!values.empty(), "ks: empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d_stat = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = law.cdf(values[i]);
    const double up = (static_cast<double>(i) + 1.0) / n - f;
    const double down = f - static_cast<double>(i) / n;
    d_stat = std::max(d_stat, std::max(up, down));
  }
  return d_stat;
}

MarginalTestReport marginal_stat_test(const std::vector<Vec>& samples,
                                      const RadialMeasure& expected,
                                      bool check_directions) {
  require(samples.size() >= 10000, "marginal test: needs n >= 10^4");
  MarginalTestReport rep;
  rep.n = static_cast<std::int64_t>(samples.size());
  const int d = static_cast<int>(samples[0].size());
  const double n = static_cast<double>(samples.size());

  std::vector<double> radii(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) radii[i] = norm(samples[i]);
  rep.ks_statistic = ks_statistic(radii, expected);
  rep.ks_pvalue = kolmogorov_pvalue(std::sqrt(n) * rep.ks_statistic);
  rep.radii_passed = rep.ks_pvalue >= 1e-3;

  rep.directions_checked = check_directions;
  if (check_directions) {
    Vec mean_dir(static_cast<std::size_t>(d), 0.0);
    std::vector<double> sum_sq(static_cast<std::size_t>(d), 0.0);
    std::vector<double> sum_c(static_cast<std::size_t>(d), 0.0);
    std::int64_t used = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (radii[i] < 1e-12) continue;
      ++used;
      for (int c = 0; c < d; ++c) {
        const double u = samples[i][static_cast<std::size_t>(c)] / radii[i];
        mean_dir[static_cast<std::size_t>(c)] += u;
        sum_c[static_cast<std::size_t>(c)] += u;
        sum_sq[static_cast<std::size_t>(c)] += u * u;
      }
    }
    const double nn = static_cast<double>(used);
    for (double& v : mean_dir) v /= nn;
    rep.mean_direction_norm = norm(mean_dir);
    rep.mean_direction_threshold = 4.0 * std::sqrt(static_cast<double>(d)) / std::sqrt(nn);
    bool ok = rep.mean_direction_norm <= rep.mean_direction_threshold;
    // Var(<u, e_j>) should be 1/d; the estimator's sd uses the exact fourth
    // moment of a sphere coordinate, E c^4 = 3 / (d (d + 2)).
    const double fourth = 3.0 / (static_cast<double>(d) * (d + 2));
    const double var_of_var = fourth - 1.0 / (static_cast<double>(d) * d);
    rep.coord_variance_band = 4.0 * std::sqrt(var_of_var / nn);
    rep.coord_variance.resize(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) {
      const double m = sum_c[static_cast<std::size_t>(c)] / nn;
      const double var = sum_sq[static_cast<std::size_t>(c)] / nn - m * m;
      rep.coord_variance[static_cast<std::size_t>(c)] = var;
      if (std::fabs(var - 1.0 / d) > rep.coord_variance_band) ok = false;
    }
    rep.directions_passed = ok;
  }
  rep.passed = rep.radii_passed && (!check_directions || rep.directions_passed);
  return rep;
}

// --- Hadamard/Young chain ----------------------------------------------------

YoungChain hadamard_young_bound(std::span<const Vec> x,
                                std::span<const double> p) {
  const int d = static_cast<int>(x.size());
  require(static_cast<int>(p.size()) == d, "young: one exponent per column");
  double inv_sum = 0.0;
  for (double pi : p) {
    require(pi > 1.0, "young: exponents must be > 1");
    inv_sum += 1.0 / pi;
  }
  require(std::fabs(inv_sum - 1.0) <= 1e-12, "young: sum 1/p_i must be 1");
  YoungChain chain;
  chain.det = det(x);
  chain.prod_norms = 1.0;
  for (int i = 0; i < d; ++i) {
    const double ni = norm(x[static_cast<std::size_t>(i)]);
    chain.prod_norms *= ni;
    chain.h0 += std::pow(ni, p[static_cast<std::size_t>(i)]) / p[static_cast<std::size_t>(i)];
  }
  if (std::fabs(chain.det) > chain.prod_norms + 1e-12 ||
      chain.prod_norms > chain.h0 + 1e-12)
    throw InternalError("young: inequality chain violated beyond tolerance");
  return chain;
}

}  // namespace detmmot
