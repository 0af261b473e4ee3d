#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detmmot/lp.hpp"
#include "detmmot/radial.hpp"

namespace detmmot {

// Flat store of n tuples of d points in R^d (column i of tuple t at
// [t*d*d + i*d, t*d*d + (i+1)*d)).
struct SampleSet {
  int d = 0;
  std::vector<double> data;

  std::int64_t size() const {
    return d ? static_cast<std::int64_t>(data.size()) / (d * d) : 0;
  }
  std::span<const double> tuple(std::int64_t t) const {
    const std::size_t stride = static_cast<std::size_t>(d) * d;
    return std::span<const double>(data.data() + static_cast<std::size_t>(t) * stride,
                                   stride);
  }
  std::span<const double> column(std::int64_t t, int i) const {
    const std::size_t stride = static_cast<std::size_t>(d) * d;
    return std::span<const double>(
        data.data() + static_cast<std::size_t>(t) * stride +
            static_cast<std::size_t>(i) * d,
        static_cast<std::size_t>(d));
  }
};

struct ConditionRecord {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::int64_t checked = 0;
  std::int64_t skipped = 0;
  std::string detail;
};

struct CertificateReport {
  double max_feasibility_violation = 0.0;
  double max_tightness_gap = 0.0;
  double max_subgradient_residual = 0.0;
  bool passed = true;
  std::vector<ConditionRecord> conditions;

  void add(ConditionRecord rec) {
    passed = passed && rec.passed;
    conditions.push_back(std::move(rec));
  }
};

// sum_i psi_i(|x_i|) = det(x) on the support. Feasibility of the potentials
// on the tuples is checked first; an infeasible tuple fails the report with
// its index recorded.
CertificateReport check_tightness(const SampleSet& support,
                                  const RadialSolution& solution,
                                  double tol = 1e-6);

// Complementary slackness of a discrete plan against discrete potentials.
CertificateReport check_tightness(const Coupling& plan,
                                  const PotentialSet& potentials,
                                  const CostTensor& cost, double tol = 1e-9);

// Fenchel extremality on the support: with w = signed wedge excluding i,
//   phi_i(x_i) + phi_i*(w) = <x_i, w>   and   sum_{j != i} phi_j(x_j) = phi_i*(w),
// phi_i(x) = psi_i(|x|) and phi_i* evaluated over the tabulated radial grid
// in the direction w/|w|. Requires convex slope tables.
CertificateReport check_subgradient(const SampleSet& support,
                                    const RadialSolution& solution,
                                    double tol = 1e-5);

// d = 3 gradient system on the support:
//   psi_1'(|x|) x/|x| = y ^ z,  psi_2'(|y|) y/|y| = -(x ^ z),
//   psi_3'(|z|) z/|z| = x ^ y.
// Tuples containing a near-zero column are skipped and counted.
CertificateReport check_gradient_system_3d(const SampleSet& support,
                                           const RadialSolution& solution,
                                           double tol = 1e-5);

// --- sphere Fubini -------------------------------------------------------

struct FubiniResult {
  std::string fn;
  double lhs = 0.0;
  double rhs = 0.0;
  double stderr_pooled = 0.0;
  bool passed = false;  // |lhs - rhs| <= 4 * stderr
};

// Test-function ids accepted by fubini_sphere_test.
const std::vector<std::string>& fubini_catalog();

// Monte-Carlo estimates of both sides of the sphere disintegration identity
// on S^k (k >= 2): outer point uniform on S^k, inner point uniform on the
// orthogonal subsphere; the identity swaps the two roles.
FubiniResult fubini_sphere_test(int k, const std::string& fn_id,
                                std::int64_t n, Rng& rng);

// --- marginal goodness-of-fit --------------------------------------------

struct MarginalTestReport {
  std::int64_t n = 0;
  double ks_statistic = 0.0;
  double ks_pvalue = 0.0;
  bool radii_passed = false;
  double mean_direction_norm = 0.0;
  double mean_direction_threshold = 0.0;
  std::vector<double> coord_variance;  // Var(<u, e_j>) per axis
  double coord_variance_band = 0.0;    // 4 sigma around 1/d
  bool directions_passed = true;
  bool directions_checked = false;
  bool passed = false;
};

// KS test of |samples| against the expected radial law (p-value threshold
// 1e-3) plus, when check_directions is set, direction uniformity via the
// empirical mean direction (threshold 4 sqrt(d) / sqrt(n)) and per-axis
// variance of <direction, e_j> within a 4 sigma band of 1/d.
MarginalTestReport marginal_stat_test(const std::vector<Vec>& samples,
                                      const RadialMeasure& expected,
                                      bool check_directions);

// One-sample KS statistic of the (unsorted) values against the law's CDF.
double ks_statistic(std::vector<double> values, const RadialMeasure& law);

// Asymptotic Kolmogorov tail probability P(sqrt(n) D > x).
double kolmogorov_pvalue(double x);

// --- Hadamard/Young chain --------------------------------------------------

struct YoungChain {
  double det = 0.0;
  double prod_norms = 0.0;
  double h0 = 0.0;
};

// Computes |det(x)| <= prod |x_i| <= sum |x_i|^{p_i} / p_i for Young
// exponents (p_i > 1, sum 1/p_i = 1). Throws InternalError if the chain is
// violated beyond -1e-12 (it is a theorem).
YoungChain hadamard_young_bound(std::span<const Vec> x,
                                std::span<const double> p);

}  // namespace detmmot
