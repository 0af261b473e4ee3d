#pragma once

#include <vector>

#include "detmmot/linalg.hpp"

namespace detmmot {

// Finitely supported probability measure on R^dim.
struct DiscreteMeasure {
  int dim = 0;
  std::vector<Vec> atoms;
  std::vector<double> weights;

  std::size_t size() const { return atoms.size(); }
};

// Validates: n >= 1, consistent dimensions, weights >= 0 summing to 1
// within 1e-12, finite coordinates.
DiscreteMeasure make_discrete(std::vector<Vec> atoms,
                              std::vector<double> weights);

// Probability measure on R_+ stored as a tabulated quantile function
// (knots u in [0,1] mapped to radii, linear interpolation between knots;
// duplicated u-knots encode jumps). The atomless flag certifies a strictly
// increasing quantile, i.e. an atom-free law.
class RadialMeasure {
 public:
  static constexpr int kDefaultKnots = 1024;

  // Infers the atomless flag (strictly increasing r over (0,1)).
  static RadialMeasure from_quantile_table(std::vector<double> u,
                                           std::vector<double> r);
  static RadialMeasure from_quantile_table(std::vector<double> u,
                                           std::vector<double> r,
                                           bool atomless);

  // Generalized inverse CDF. At duplicated knots (jumps) the table evaluates
  // to the upper branch, matching the step tables built by radial_projection.
  double quantile(double u) const;

  // Right-continuous CDF recovered from the quantile table.
  double cdf(double r) const;

  bool atomless() const { return atomless_; }
  const std::vector<double>& knots_u() const { return u_; }
  const std::vector<double>& knots_r() const { return r_; }
  double r_min() const { return r_.front(); }
  double r_max() const { return r_.back(); }

  // Same law re-tabulated on the uniform m-point u-grid.
  RadialMeasure resampled(int m) const;

 private:
  RadialMeasure() = default;
  std::vector<double> u_, r_;
  bool atomless_ = false;
};

// Radial law of the uniform probability measure on the dim-ball of given
// radius: CDF (r/R)^dim, quantile R * u^(1/dim).
RadialMeasure uniform_ball_radial(int dim, double radius = 1.0,
                                  int knots = RadialMeasure::kDefaultKnots);

// Uniform law on the interval [a, b] (as a measure on R_+; requires a >= 0).
RadialMeasure uniform_interval_radial(double a, double b,
                                      int knots = RadialMeasure::kDefaultKnots);

// Tabulated nondecreasing map r -> H(r) on [r_min, r_max], linear
// interpolation, clamped outside the knot range.
class MonotoneMap {
 public:
  MonotoneMap(std::vector<double> r, std::vector<double> h);
  static MonotoneMap identity(double r_min, double r_max);

  double operator()(double r) const;
  const std::vector<double>& knots_r() const { return r_; }
  const std::vector<double>& values() const { return h_; }
  double domain_min() const { return r_.front(); }
  double domain_max() const { return r_.back(); }

 private:
  std::vector<double> r_, h_;
};

// Push-forward of mu through |.|. The result is the exact step quantile of
// the projected atomic law (finite discrete measures always project to
// atomic radial laws, so the atomless flag is false).
RadialMeasure radial_projection(const DiscreteMeasure& mu);

// The nondecreasing map H = Q_2 o F_1 pushing mu1 forward to mu2, tabulated
// on a shared uniform u-grid. Throws AtomicMarginalError unless mu1 is
// atomless (uniqueness hypothesis).
MonotoneMap monotone_rearrangement(const RadialMeasure& mu1,
                                   const RadialMeasure& mu2);

// sup over a 1001-point u-grid of |Q_2(u) - H(Q_1(u))|.
double pushforward_check(const MonotoneMap& map, const RadialMeasure& mu1,
                         const RadialMeasure& mu2);

}  // namespace detmmot
