#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "detmmot/measures.hpp"

namespace detmmot {

enum class Objective { Det, AbsDet };

// Desk-scale guards: dense objective tensor entries and simplex row count.
inline constexpr std::int64_t kMaxTensorEntries = 5'000'000;
inline constexpr int kMaxSimplexRows = 2'000;

// Dense tabulated objective over the product of the marginal supports.
// Flat index: J = j_0 + n_0*(j_1 + n_1*(...)), axis 0 fastest.
struct CostTensor {
  std::vector<int> shape;
  std::vector<double> values;

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
  double at(std::int64_t flat) const { return values[static_cast<std::size_t>(flat)]; }
  std::vector<int> unflatten(std::int64_t flat) const;
  std::int64_t flatten(std::span<const int> idx) const;
};

// Objective tensor from a tuple evaluator; `fn` receives the d atom columns.
// threads = 0 picks a machine-dependent worker count; the result is
// identical for any count.
CostTensor make_cost(
    const std::vector<DiscreteMeasure>& marginals,
    const std::function<double(std::span<const Vec>)>& fn, int threads = 0);

// det / |det| objective tensors (the first-class objectives).
CostTensor make_det_cost(const std::vector<DiscreteMeasure>& marginals,
                         Objective objective, int threads = 0);

// Joint probability measure on the product of supports, stored sparsely
// (vertex plans have at most sum n_i - d + 1 nonzeros).
struct Coupling {
  std::vector<int> shape;
  struct Entry {
    std::vector<int> index;
    double mass;
  };
  std::vector<Entry> entries;  // sorted by flat index

  // Max absolute deviation of any axis marginal from the target weights.
  double max_marginal_violation(
      const std::vector<DiscreteMeasure>& marginals) const;
};

// Dual potentials tabulated on the marginal atoms.
struct PotentialSet {
  std::vector<std::vector<double>> tables;
};

// max over all index tuples of c_J - sum_i phi_i[j_i]; feasible iff <= 0.
double feasibility_violation(const PotentialSet& potentials,
                             const CostTensor& cost);

// sum_i sum_j phi_i[j] * w_i[j].
double dual_value(const PotentialSet& potentials,
                  const std::vector<DiscreteMeasure>& marginals);

// Shifts each table so min = 0 for i < d, absorbing the total into phi_d;
// dual_value is invariant.
PotentialSet normalize(const PotentialSet& potentials);

struct SolveReport {
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;  // dual - primal
  Coupling plan;
  PotentialSet potentials;
  std::int64_t pivots = 0;
};

// dual_value - primal_value; throws InternalError when it is negative
// beyond -1e-9 * (1 + |primal|), which would signal a solver bug.
double duality_gap(const SolveReport& report);

// Exact optimum of the multi-marginal transportation LP
//   maximize sum_J c_J gamma_J  over  gamma in Pi(mu_1,...,mu_d)
// by revised simplex on the transportation polytope (Bland's rule for
// anti-cycling and tie-breaking). Potentials come from the optimal dual
// prices and are feasible; gap certifies optimality.
SolveReport solve_with_cost(const std::vector<DiscreteMeasure>& marginals,
                            const CostTensor& cost);
SolveReport solve_primal(const std::vector<DiscreteMeasure>& marginals,
                         Objective objective, int threads = 0);

// One full sweep i = 1..d (or the given order) of
//   phi_i(a) <- max over other-index tuples of (c - sum_{j != i} phi_j),
// evaluated over the discrete supports. Output is dual-feasible, pointwise
// <= feasible input, and a fixed point of the sweep.
PotentialSet convexify(const PotentialSet& potentials,
                       const std::vector<DiscreteMeasure>& marginals,
                       const CostTensor& cost,
                       std::span<const int> sweep_order = {});
PotentialSet convexify(const PotentialSet& potentials,
                       const std::vector<DiscreteMeasure>& marginals,
                       Objective objective,
                       std::span<const int> sweep_order = {});

// Product-grid discretization of radial marginals: n_radii quantile-midpoint
// radii times n_dirs quasi-uniform unit directions (equal angles for d = 2,
// Fibonacci lattice for d = 3, seeded uniform draws above), uniform weights.
std::vector<DiscreteMeasure> discretize_radial_instance(
    const std::vector<RadialMeasure>& marginals, int n_radii, int n_dirs,
    Rng& rng);

}  // namespace detmmot
