#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "detmmot/measures.hpp"

namespace detmmot {

// Convex tabulated potential on R_+: values by linear interpolation between
// knots, slopes tabulated from the closed-form slope field. Outside the knot
// range the value extends affinely with the boundary slope (flat below the
// first knot when its slope is 0).
struct RadialPotential {
  std::vector<double> r, value, slope;

  double operator()(double x) const;
  double slope_at(double x) const;
  bool convex(double tol = 1e-12) const;  // nondecreasing slope table
};

struct RadialValidation {
  double max_feasibility_violation = 0.0;  // max over grid of prod r - sum psi
  double max_tightness_gap = 0.0;          // max over graph of sum psi - prod
  bool convex = true;
  bool ok(double feas_tol = 1e-8, double tight_tol = 1e-6) const {
    return convex && max_feasibility_violation <= feas_tol &&
           max_tightness_gap <= tight_tol;
  }
};

// Solution of the radial problem: monotone maps H_2..H_d (H_1 = identity),
// dual potentials psi_1..psi_d with psi_i(r_min) = 0 for i < d and psi_d
// anchored by tightness at the smallest grid radius, and the optimal value
// of the product objective.
struct RadialSolution {
  int d = 0;
  std::vector<MonotoneMap> maps;          // size d-1, maps[i] = H_{i+2}
  std::vector<RadialPotential> potentials;  // size d
  double value = 0.0;

  // H_i for 1-based i (H_1 = identity).
  double map(int i, double r) const;

  RadialValidation validate(const std::vector<RadialMeasure>& marginals) const;
};

// Monotone-rearrangement solution of the product-objective problem over the
// given atomless radial marginals. Value by 4096-point midpoint quadrature
// in the quantile variable; potentials by integrating the slope field
// psi_i'(H_i(r)) = prod_{j != i} H_j(r) along the monotone graph.
RadialSolution solve_radial(const std::vector<RadialMeasure>& marginals);

struct PerturbedStats {
  std::int64_t proposals = 0;
  std::int64_t accepts = 0;
  double acceptance_rate() const {
    return proposals ? static_cast<double>(accepts) / proposals : 0.0;
  }
};

// Samples the optimal coupling: x_1 = Q_1(u) * uniform direction, each
// intermediate x_i uniform on the radius-H_i(|x_1|) sphere orthogonal to its
// predecessors, and x_d closed by the wedge product so that
// det(x_1,...,x_d) = prod_i H_i(|x_1|) >= 0.
class CouplingSampler {
 public:
  CouplingSampler(std::vector<RadialMeasure> marginals, RadialSolution solution);

  int dim() const { return d_; }
  const RadialSolution& solution() const { return solution_; }
  const std::vector<RadialMeasure>& marginals() const { return marginals_; }

  // Writes one tuple into out (size d*d, column i at [i*d, (i+1)*d)).
  void sample_tuple(Rng& rng, std::span<double> out) const;

  // d = 3 only: x_2 drawn on its circle with density 1 + <y,e>/|y| w.r.t.
  // normalized arc length (rejection sampling, envelope 2); |e| = 1.
  void sample_tuple_perturbed(const Vec& e, Rng& rng, std::span<double> out,
                              PerturbedStats* stats = nullptr) const;

  // d = 3 only: wedge sign +1 with probability p, -1 otherwise; the sign
  // stream is separate so p = 1 reproduces sample_tuple draw-for-draw.
  void sample_tuple_mixture(double p, Rng& rng, Rng& sign_rng,
                            std::span<double> out) const;

  // Batch helpers returning n*d*d flat data.
  std::vector<double> sample(std::int64_t n, Rng& rng) const;
  std::vector<double> sample_perturbed(const Vec& e, std::int64_t n, Rng& rng,
                                       PerturbedStats* stats = nullptr) const;
  std::vector<double> sample_mixture(double p, std::int64_t n, Rng& rng) const;

 private:
  double draw_first_radius(Rng& rng) const;
  int d_;
  std::vector<RadialMeasure> marginals_;
  RadialSolution solution_;
};

// The explicit 4-dimensional Monge maps: given x in R^4 returns
// (T_2(x), T_3(x), T_4(x)); each is linear, norm-preserving, and together
// with x forms an orthogonal basis with det(x, T_2 x, T_3 x, T_4 x) = |x|^4.
std::array<Vec, 3> monge_maps_4d(const Vec& x);

}  // namespace detmmot
