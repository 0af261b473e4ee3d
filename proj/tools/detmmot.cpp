// detmmot -- multi-marginal optimal transport with determinant objectives.
//
// Subcommands: solve, radial, certify, compare, fubini-test, monge4d.
// Exit codes: 0 ok, 2 bad input, 3 certification failure, 4 resource guard.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "detmmot/json_io.hpp"

namespace dm = detmmot;

namespace {

constexpr std::uint64_t kDefaultSeed = 0xC0FFEE;

int env_threads() {
  const char* v = std::getenv("DETMMOT_THREADS");
  if (!v) return 0;
  const int t = std::atoi(v);
  return t > 0 ? t : 1;
}

struct Tolerances {
  double tightness = 1e-6;
  double subgradient = 1e-5;
  double gradient = 1e-5;
  double orth = 1e-8;
  double gap = 1e-9;
};

void add_tolerance_flags(CLI::App* cmd, Tolerances& tol) {
  cmd->add_option("--tol-tightness", tol.tightness, "tightness tolerance");
  cmd->add_option("--tol-subgradient", tol.subgradient, "Fenchel residual tolerance");
  cmd->add_option("--tol-gradient", tol.gradient, "gradient-system tolerance");
  cmd->add_option("--tol-orth", tol.orth, "orthogonality tolerance");
  cmd->add_option("--tol-gap", tol.gap, "relative duality-gap tolerance");
}

dm::Objective parse_objective(const std::string& s) {
  if (s == "det") return dm::Objective::Det;
  if (s == "absdet") return dm::Objective::AbsDet;
  throw dm::ContractViolation("objective must be 'det' or 'absdet'");
}

// --- solve -------------------------------------------------------------------

int cmd_solve(const std::string& instance_path, const std::string& objective_flag,
              const std::string& out_path, const Tolerances& tol) {
  const nlohmann::json inst = dm::read_json_file(instance_path);
  const auto marginals = dm::discrete_marginals_from_json(inst);
  std::string objective_name = "det";
  if (inst.is_object() && inst.contains("objective"))
    objective_name = inst.at("objective").get<std::string>();
  if (!objective_flag.empty()) objective_name = objective_flag;
  const dm::Objective objective = parse_objective(objective_name);

  dm::SolveReport report = dm::solve_primal(marginals, objective, env_threads());
  const double gap = dm::duality_gap(report);
  dm::atomic_write_file(out_path, dm::to_json(report, objective).dump(1) + "\n");
  std::cout << "value " << dm::format_double_17(report.primal_value) << " gap "
            << dm::format_double_17(gap) << "\n";
  const bool certified = gap <= tol.gap * (1.0 + std::fabs(report.primal_value));
  if (!certified) {
    std::cerr << "warning: duality gap exceeds tolerance\n";
    return 3;
  }
  return 0;
}

// --- radial ------------------------------------------------------------------

int cmd_radial(const std::string& marginals_path, int expect_d, std::int64_t n,
               std::uint64_t seed, const std::string& samples_path,
               const std::string& summary_path) {
  const auto marginals =
      dm::radial_marginals_from_json(dm::read_json_file(marginals_path));
  const int d = static_cast<int>(marginals.size());
  if (expect_d > 0 && expect_d != d)
    throw dm::ContractViolation("--d does not match the number of marginals");
  dm::RadialSolution solution = dm::solve_radial(marginals);
  const double closed_form = solution.value;
  dm::CouplingSampler sampler(marginals, std::move(solution));

  dm::Rng rng(seed);
  dm::CsvSampleWriter csv(samples_path, d);
  std::vector<double> tuple(static_cast<std::size_t>(d) * d);
  double mean = 0.0, m2 = 0.0;
  for (std::int64_t t = 0; t < n; ++t) {
    sampler.sample_tuple(rng, tuple);
    const double dt = dm::det_flat(tuple, d);
    csv.write_tuple(tuple, dt);
    const double delta = dt - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (dt - mean);
  }
  csv.close();

  dm::JValue summary = dm::JValue::object();
  summary.set("command", dm::JValue::string("radial"));
  summary.set("d", dm::JValue::integer(d));
  summary.set("n", dm::JValue::integer(n));
  summary.set("seed", dm::JValue::integer(static_cast<std::int64_t>(seed)));
  summary.set("value_closed_form", dm::JValue::number(closed_form));
  if (n > 0) {
    const double stderr_mc =
        n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n))
              : 0.0;
    summary.set("value_empirical", dm::JValue::number(mean));
    summary.set("stderr", dm::JValue::number(stderr_mc));
  } else {
    summary.set("value_empirical", dm::JValue::null());
    summary.set("stderr", dm::JValue::null());
  }
  summary.set("solution", dm::to_json(sampler.solution()));
  dm::atomic_write_file(summary_path, summary.dump(1) + "\n");
  std::cout << "value_closed_form " << dm::format_double_17(closed_form);
  if (n > 0) std::cout << " value_empirical " << dm::format_double_17(mean);
  std::cout << "\n";
  return 0;
}

// --- certify -----------------------------------------------------------------

int cmd_certify(const std::string& samples_path, const std::string& plan_path,
                const std::string& potentials_path,
                const std::string& instance_path, const std::string& out_path,
                const Tolerances& tol) {
  dm::CertificateReport merged;
  if (!samples_path.empty()) {
    const dm::SampleSet samples = dm::read_samples_csv(samples_path);
    const dm::RadialSolution solution =
        dm::solution_from_json(dm::read_json_file(potentials_path));
    if (solution.d != samples.d)
      throw dm::ContractViolation("certify: samples and solution dimensions differ");

    // Support-law audit first: orthogonality, norm relation, sign of det.
    double max_orth = 0.0, max_norm_rel = 0.0, min_det = 0.0;
    const int d = samples.d;
    for (std::int64_t t = 0; t < samples.size(); ++t) {
      const auto tuple = samples.tuple(t);
      double norms[dm::kMaxDim];
      for (int i = 0; i < d; ++i) norms[i] = dm::norm(samples.column(t, i));
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          const double denom = std::max(norms[i] * norms[j], 1e-300);
          max_orth = std::max(
              max_orth,
              std::fabs(dm::dot(samples.column(t, i), samples.column(t, j))) / denom);
        }
      const double r1 = norms[0];
      for (int i = 2; i <= d; ++i) {
        const double expect = solution.map(i, r1);
        const double denom = std::max(1.0, expect);
        max_norm_rel =
            std::max(max_norm_rel, std::fabs(norms[i - 1] - expect) / denom);
      }
      min_det = std::min(min_det, dm::det_flat(tuple, d));
    }
    {
      dm::ConditionRecord rec;
      rec.name = "support_orthogonality";
      rec.residual = max_orth;
      rec.tolerance = tol.orth;
      rec.passed = max_orth <= tol.orth;
      rec.checked = samples.size();
      merged.add(std::move(rec));
    }
    {
      dm::ConditionRecord rec;
      rec.name = "support_norm_relation";
      rec.residual = max_norm_rel;
      rec.tolerance = tol.orth;
      rec.passed = max_norm_rel <= tol.orth;
      rec.checked = samples.size();
      merged.add(std::move(rec));
    }
    {
      dm::ConditionRecord rec;
      rec.name = "support_nonnegative_det";
      rec.residual = std::max(0.0, -min_det);
      rec.tolerance = 0.0;
      rec.passed = min_det >= 0.0;
      rec.checked = samples.size();
      merged.add(std::move(rec));
    }

    const dm::CertificateReport tight = dm::check_tightness(samples, solution, tol.tightness);
    const dm::CertificateReport sub = dm::check_subgradient(samples, solution, tol.subgradient);
    merged.max_feasibility_violation = tight.max_feasibility_violation;
    merged.max_tightness_gap = tight.max_tightness_gap;
    merged.max_subgradient_residual = sub.max_subgradient_residual;
    for (const auto& c : tight.conditions) merged.add(c);
    for (const auto& c : sub.conditions) merged.add(c);
    if (samples.d == 3) {
      const dm::CertificateReport grad =
          dm::check_gradient_system_3d(samples, solution, tol.gradient);
      merged.max_subgradient_residual =
          std::max(merged.max_subgradient_residual, grad.max_subgradient_residual);
      for (const auto& c : grad.conditions) merged.add(c);
    }
  } else if (!plan_path.empty()) {
    const nlohmann::json plan_json = dm::read_json_file(plan_path);
    const auto marginals =
        dm::discrete_marginals_from_json(dm::read_json_file(instance_path));
    const nlohmann::json inst = dm::read_json_file(instance_path);
    std::string objective_name = "det";
    if (inst.is_object() && inst.contains("objective"))
      objective_name = inst.at("objective").get<std::string>();
    const dm::CostTensor cost =
        dm::make_det_cost(marginals, parse_objective(objective_name), env_threads());

    dm::Coupling plan;
    if (!plan_json.is_object() || !plan_json.contains("plan"))
      throw dm::ContractViolation("certify: plan file needs a 'plan' object");
    for (const auto& s : plan_json.at("plan").at("shape"))
      plan.shape.push_back(s.get<int>());
    if (plan.shape != cost.shape)
      throw dm::ContractViolation("certify: plan shape does not match the instance");
    for (const auto& e : plan_json.at("plan").at("entries")) {
      dm::Coupling::Entry entry;
      for (const auto& v : e.at(0)) entry.index.push_back(v.get<int>());
      if (static_cast<int>(entry.index.size()) != static_cast<int>(plan.shape.size()))
        throw dm::ContractViolation("certify: plan entry arity mismatch");
      entry.mass = e.at(1).get<double>();
      plan.entries.push_back(std::move(entry));
    }
    dm::PotentialSet potentials;
    if (!potentials_path.empty()) {
      potentials = dm::potentials_from_json(dm::read_json_file(potentials_path));
    } else if (plan_json.contains("potentials")) {
      potentials = dm::potentials_from_json(plan_json.at("potentials"));
    } else {
      throw dm::ContractViolation("certify: no potentials given");
    }
    for (std::size_t i = 0; i < marginals.size(); ++i)
      if (potentials.tables.size() != marginals.size() ||
          potentials.tables[i].size() != marginals[i].size())
        throw dm::ContractViolation("certify: potential tables do not match supports");

    const dm::CertificateReport tight = dm::check_tightness(plan, potentials, cost, 1e-9);
    merged.max_feasibility_violation = tight.max_feasibility_violation;
    merged.max_tightness_gap = tight.max_tightness_gap;
    for (const auto& c : tight.conditions) merged.add(c);

    dm::ConditionRecord rec;
    rec.name = "plan_marginals";
    rec.residual = plan.max_marginal_violation(marginals);
    rec.tolerance = 1e-9;
    rec.passed = rec.residual <= rec.tolerance;
    rec.checked = static_cast<std::int64_t>(plan.entries.size());
    merged.add(std::move(rec));
  } else {
    throw dm::ContractViolation("certify: need --samples or --plan");
  }

  if (!out_path.empty())
    dm::atomic_write_file(out_path, dm::to_json(merged).dump(1) + "\n");
  std::cout << (merged.passed ? "certificate PASS" : "certificate FAIL") << "\n";
  return merged.passed ? 0 : 3;
}

// --- compare -------------------------------------------------------------------

int cmd_compare(const std::string& marginals_path, int n_radii, int n_dirs,
                std::uint64_t seed, const std::string& out_path) {
  const auto radial_marginals =
      dm::radial_marginals_from_json(dm::read_json_file(marginals_path));
  const dm::RadialSolution solution = dm::solve_radial(radial_marginals);
  dm::Rng rng(seed);
  const auto discrete =
      dm::discretize_radial_instance(radial_marginals, n_radii, n_dirs, rng);
  dm::SolveReport report = dm::solve_primal(discrete, dm::Objective::Det, env_threads());
  const double gap = dm::duality_gap(report);
  const double deviation =
      std::fabs(report.primal_value - solution.value) /
      std::max(1e-300, std::fabs(solution.value));

  dm::JValue j = dm::JValue::object();
  j.set("command", dm::JValue::string("compare"));
  j.set("n_radii", dm::JValue::integer(n_radii));
  j.set("n_dirs", dm::JValue::integer(n_dirs));
  j.set("seed", dm::JValue::integer(static_cast<std::int64_t>(seed)));
  j.set("lp_value", dm::JValue::number(report.primal_value));
  j.set("lp_gap", dm::JValue::number(gap));
  j.set("lp_pivots", dm::JValue::integer(report.pivots));
  j.set("closed_form_value", dm::JValue::number(solution.value));
  j.set("relative_deviation", dm::JValue::number(deviation));
  if (!out_path.empty()) dm::atomic_write_file(out_path, j.dump(1) + "\n");
  std::cout << "lp_value " << dm::format_double_17(report.primal_value)
            << " closed_form " << dm::format_double_17(solution.value)
            << " relative_deviation " << dm::format_double_17(deviation) << "\n";
  return 0;
}

// --- fubini-test ------------------------------------------------------------------

int cmd_fubini(int k, const std::string& fn, std::int64_t n, std::uint64_t seed,
               const std::string& out_path) {
  std::vector<std::string> fns;
  if (fn == "all") {
    fns = dm::fubini_catalog();
  } else {
    fns.push_back(fn);
  }
  dm::Rng rng(seed);
  dm::JValue arr = dm::JValue::array();
  bool all_passed = true;
  for (const auto& id : fns) {
    dm::Rng sub = rng.split();
    const dm::FubiniResult res = dm::fubini_sphere_test(k, id, n, sub);
    all_passed = all_passed && res.passed;
    std::cout << id << " lhs " << dm::format_double_17(res.lhs) << " rhs "
              << dm::format_double_17(res.rhs) << " stderr "
              << dm::format_double_17(res.stderr_pooled)
              << (res.passed ? " PASS" : " FAIL") << "\n";
    arr.push(dm::to_json(res));
  }
  if (!out_path.empty()) {
    dm::JValue j = dm::JValue::object();
    j.set("command", dm::JValue::string("fubini-test"));
    j.set("k", dm::JValue::integer(k));
    j.set("n", dm::JValue::integer(n));
    j.set("seed", dm::JValue::integer(static_cast<std::int64_t>(seed)));
    j.set("results", std::move(arr));
    j.set("passed", dm::JValue::boolean(all_passed));
    dm::atomic_write_file(out_path, j.dump(1) + "\n");
  }
  return all_passed ? 0 : 3;
}

// --- monge4d ------------------------------------------------------------------------

int cmd_monge4d(std::int64_t n, std::uint64_t seed, const std::string& out_path) {
  dm::Rng rng(seed);
  double max_norm_res = 0.0, max_orth_res = 0.0, max_det_res = 0.0;
  std::vector<dm::Vec> pushed[3];
  const std::int64_t n_marginal = 100000;
  for (int i = 0; i < 3; ++i)
    pushed[i].reserve(static_cast<std::size_t>(std::min(n, n_marginal)));
  for (std::int64_t t = 0; t < std::max(n, n_marginal); ++t) {
    const double r = std::pow(rng.uniform01(), 0.25);
    dm::Vec x = dm::random_unit_vector(4, rng);
    for (double& c : x) c *= r;
    const auto maps = dm::monge_maps_4d(x);
    if (t < n) {
      const double xn = dm::norm(x);
      dm::Vec cols[4] = {x, maps[0], maps[1], maps[2]};
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
          max_orth_res = std::max(max_orth_res, std::fabs(dm::dot(cols[i], cols[j])));
      for (int i = 0; i < 3; ++i)
        max_norm_res = std::max(max_norm_res, std::fabs(dm::norm(maps[i]) - xn));
      const double dt = dm::det(std::span<const dm::Vec>(cols, 4));
      const double expect = xn * xn * xn * xn;
      max_det_res = std::max(max_det_res,
                             std::fabs(dt - expect) / std::max(1.0, expect));
    }
    if (t < n_marginal)
      for (int i = 0; i < 3; ++i) pushed[i].push_back(maps[i]);
  }
  const dm::RadialMeasure ball = dm::uniform_ball_radial(4);
  bool marginals_passed = true;
  dm::JValue reports = dm::JValue::array();
  for (int i = 0; i < 3; ++i) {
    const dm::MarginalTestReport rep = dm::marginal_stat_test(pushed[i], ball, true);
    marginals_passed = marginals_passed && rep.passed;
    reports.push(dm::to_json(rep));
  }
  const bool exact_ok =
      max_norm_res <= 1e-12 && max_orth_res <= 1e-12 && max_det_res <= 1e-10;
  const bool passed = exact_ok && marginals_passed;
  dm::JValue j = dm::JValue::object();
  j.set("command", dm::JValue::string("monge4d"));
  j.set("n", dm::JValue::integer(n));
  j.set("seed", dm::JValue::integer(static_cast<std::int64_t>(seed)));
  j.set("max_norm_residual", dm::JValue::number(max_norm_res));
  j.set("max_orthogonality_residual", dm::JValue::number(max_orth_res));
  j.set("max_det_residual_rel", dm::JValue::number(max_det_res));
  j.set("pushforward_marginals", std::move(reports));
  j.set("passed", dm::JValue::boolean(passed));
  if (!out_path.empty()) dm::atomic_write_file(out_path, j.dump(1) + "\n");
  std::cout << (passed ? "monge4d PASS" : "monge4d FAIL") << "\n";
  return passed ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-marginal optimal transport with determinant objectives"};
  app.require_subcommand(1);

  Tolerances tol;
  std::uint64_t seed = kDefaultSeed;
  std::int64_t n = 0;

  // solve
  std::string solve_instance, solve_objective, solve_out = "report.json";
  CLI::App* solve = app.add_subcommand("solve", "solve a discrete instance");
  solve->add_option("instance", solve_instance, "instance JSON")->required();
  solve->add_option("--objective", solve_objective, "det | absdet");
  solve->add_option("--out", solve_out, "report path");
  add_tolerance_flags(solve, tol);

  // radial
  std::string radial_marginals, radial_samples = "samples.csv",
              radial_summary = "summary.json";
  int radial_d = 0;
  std::int64_t radial_n = 100000;
  CLI::App* radial = app.add_subcommand("radial", "closed-form radial solution + sampler");
  radial->add_option("marginals", radial_marginals, "radial marginals JSON")->required();
  radial->add_option("--d", radial_d, "expected dimension (checks the file)");
  radial->add_option("--n", radial_n, "number of sampled tuples");
  radial->add_option("--seed", seed, "RNG seed");
  radial->add_option("--samples", radial_samples, "samples CSV path");
  radial->add_option("--out", radial_summary, "summary JSON path");

  // certify
  std::string cert_samples, cert_plan, cert_potentials, cert_instance,
      cert_out = "certificate.json";
  CLI::App* certify = app.add_subcommand("certify", "check optimality conditions");
  certify->add_option("--samples", cert_samples, "samples CSV (radial route)");
  certify->add_option("--plan", cert_plan, "solve report JSON (discrete route)");
  certify->add_option("--potentials", cert_potentials,
                      "potentials / radial solution JSON");
  certify->add_option("--instance", cert_instance, "instance JSON (discrete route)");
  certify->add_option("--out", cert_out, "certificate path");
  add_tolerance_flags(certify, tol);

  // compare
  std::string compare_marginals, compare_out = "comparison.json";
  int n_radii = 6, n_dirs = 12;
  CLI::App* compare = app.add_subcommand("compare", "LP vs closed-form value");
  compare->add_option("marginals", compare_marginals, "radial marginals JSON")->required();
  compare->add_option("--n-radii", n_radii, "radii per marginal");
  compare->add_option("--n-dirs", n_dirs, "directions per marginal");
  compare->add_option("--seed", seed, "RNG seed");
  compare->add_option("--out", compare_out, "comparison path");

  // fubini-test
  int fub_k = 2;
  std::string fub_fn = "all", fub_out;
  CLI::App* fubini = app.add_subcommand("fubini-test", "sphere disintegration check");
  fubini->add_option("--k", fub_k, "sphere dimension k (S^k)");
  fubini->add_option("--fn", fub_fn, "test function id or 'all'");
  fubini->add_option("--n", n, "Monte-Carlo samples per side")->default_val(1000000);
  fubini->add_option("--seed", seed, "RNG seed");
  fubini->add_option("--out", fub_out, "result JSON path");

  // monge4d
  std::string monge_out;
  std::int64_t monge_n = 10000;
  CLI::App* monge = app.add_subcommand("monge4d", "verify the explicit 4D maps");
  monge->add_option("--n", monge_n, "number of random points");
  monge->add_option("--seed", seed, "RNG seed");
  monge->add_option("--out", monge_out, "result JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return cmd_solve(solve_instance, solve_objective, solve_out, tol);
    if (radial->parsed())
      return cmd_radial(radial_marginals, radial_d, radial_n, seed,
                        radial_samples, radial_summary);
    if (certify->parsed())
      return cmd_certify(cert_samples, cert_plan, cert_potentials, cert_instance,
                         cert_out, tol);
    if (compare->parsed())
      return cmd_compare(compare_marginals, n_radii, n_dirs, seed, compare_out);
    if (fubini->parsed()) return cmd_fubini(fub_k, fub_fn, n, seed, fub_out);
    if (monge->parsed()) return cmd_monge4d(monge_n, seed, monge_out);
  } catch (const dm::ResourceLimitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const dm::AtomicMarginalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const dm::ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const dm::DegenerateInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
