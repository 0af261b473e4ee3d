#include "detmmot/json_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace detmmot {

JValue JValue::boolean(bool b) {
  JValue v;
  v.kind_ = Kind::Bool;
  v.bool_ = b;
  return v;
}

JValue JValue::integer(std::int64_t i) {
  JValue v;
  v.kind_ = Kind::Int;
  v.int_ = i;
  return v;
}

JValue JValue::number(double d) {
  JValue v;
  v.kind_ = Kind::Double;
  v.double_ = d;
  return v;
}

JValue JValue::string(std::string s) {
  JValue v;
  v.kind_ = Kind::String;
  v.str_ = std::move(s);
  return v;
}

JValue JValue::array() {
  JValue v;
  v.kind_ = Kind::Array;
  return v;
}

JValue JValue::object() {
  JValue v;
  v.kind_ = Kind::Object;
  return v;
}

void JValue::push(JValue v) {
  if (kind_ != Kind::Array) throw InternalError("json: push on non-array");
  items_.push_back(std::move(v));
}

void JValue::set(std::string key, JValue v) {
  if (kind_ != Kind::Object) throw InternalError("json: set on non-object");
  fields_.emplace_back(std::move(key), std::move(v));
}

std::string format_double_17(double v) {
  if (!std::isfinite(v))
    throw InternalError("json: refusing to serialize a non-finite number");
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

void escape_into(std::string& out, const std::string& s) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

void newline_indent(std::string& out, int indent, int depth) {
  if (indent <= 0) return;
  out.push_back('\n');
  out.append(static_cast<std::size_t>(indent) * depth, ' ');
}

}  // namespace

void JValue::write(std::string& out, int indent, int depth) const {
  switch (kind_) {
    case Kind::Null: out += "null"; break;
    case Kind::Bool: out += bool_ ? "true" : "false"; break;
    case Kind::Int: out += std::to_string(int_); break;
    case Kind::Double: out += format_double_17(double_); break;
    case Kind::String: escape_into(out, str_); break;
    case Kind::Array: {
      if (items_.empty()) {
        out += "[]";
        break;
      }
      out.push_back('[');
      for (std::size_t i = 0; i < items_.size(); ++i) {
        if (i) out.push_back(',');
        newline_indent(out, indent, depth + 1);
        items_[i].write(out, indent, depth + 1);
      }
      newline_indent(out, indent, depth);
      out.push_back(']');
      break;
    }
    case Kind::Object: {
      if (fields_.empty()) {
        out += "{}";
        break;
      }
      out.push_back('{');
      for (std::size_t i = 0; i < fields_.size(); ++i) {
        if (i) out.push_back(',');
        newline_indent(out, indent, depth + 1);
        escape_into(out, fields_[i].first);
        out.push_back(':');
        if (indent > 0) out.push_back(' ');
        fields_[i].second.write(out, indent, depth + 1);
      }
      newline_indent(out, indent, depth);
      out.push_back('}');
      break;
    }
  }
}

std::string JValue::dump(int indent) const {
  std::string out;
  write(out, indent, 0);
  return out;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open input file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ContractViolation("cannot open output file: " + tmp);
    out << content;
    if (!out) throw InternalError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

// --- measures ---------------------------------------------------------------

namespace {

JValue vec_to_json(std::span<const double> v) {
  JValue a = JValue::array();
  for (double x : v) a.push(JValue::number(x));
  return a;
}

std::vector<double> doubles_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array())
    throw ContractViolation(std::string("expected array for ") + what);
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number())
      throw ContractViolation(std::string("expected numbers in ") + what);
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

JValue to_json(const DiscreteMeasure& mu) {
  JValue j = JValue::object();
  j.set("type", JValue::string("discrete"));
  j.set("dim", JValue::integer(mu.dim));
  JValue atoms = JValue::array();
  for (const Vec& a : mu.atoms) atoms.push(vec_to_json(a));
  j.set("atoms", std::move(atoms));
  j.set("weights", vec_to_json(mu.weights));
  return j;
}

JValue to_json(const RadialMeasure& mu) {
  JValue j = JValue::object();
  j.set("type", JValue::string("radial"));
  j.set("quantile_u", vec_to_json(mu.knots_u()));
  j.set("quantile_r", vec_to_json(mu.knots_r()));
  j.set("atomless", JValue::boolean(mu.atomless()));
  return j;
}

DiscreteMeasure discrete_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("type", "") != std::string("discrete"))
    throw ContractViolation("expected a discrete measure object");
  if (!j.contains("atoms") || !j.contains("weights"))
    throw ContractViolation("discrete measure: missing atoms or weights");
  std::vector<Vec> atoms;
  for (const auto& a : j.at("atoms")) atoms.push_back(doubles_from_json(a, "atom"));
  std::vector<double> weights = doubles_from_json(j.at("weights"), "weights");
  DiscreteMeasure mu = make_discrete(std::move(atoms), std::move(weights));
  if (j.contains("dim") && j.at("dim").get<int>() != mu.dim)
    throw ContractViolation("discrete measure: dim does not match atoms");
  return mu;
}

RadialMeasure radial_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("type", "") != std::string("radial"))
    throw ContractViolation("expected a radial measure object");
  if (!j.contains("quantile_u") || !j.contains("quantile_r"))
    throw ContractViolation("radial measure: missing quantile tables");
  std::vector<double> u = doubles_from_json(j.at("quantile_u"), "quantile_u");
  std::vector<double> r = doubles_from_json(j.at("quantile_r"), "quantile_r");
  if (j.contains("atomless"))
    return RadialMeasure::from_quantile_table(std::move(u), std::move(r),
                                              j.at("atomless").get<bool>());
  return RadialMeasure::from_quantile_table(std::move(u), std::move(r));
}

namespace {

const nlohmann::json& marginal_list(const nlohmann::json& j) {
  if (j.is_array()) return j;
  if (j.is_object() && j.contains("marginals")) return j.at("marginals");
  throw ContractViolation("expected an array of measures or {\"marginals\": [...]}");
}

}  // namespace

std::vector<DiscreteMeasure> discrete_marginals_from_json(const nlohmann::json& j) {
  std::vector<DiscreteMeasure> out;
  for (const auto& m : marginal_list(j)) out.push_back(discrete_from_json(m));
  if (out.empty()) throw ContractViolation("no marginals given");
  return out;
}

std::vector<RadialMeasure> radial_marginals_from_json(const nlohmann::json& j) {
  std::vector<RadialMeasure> out;
  for (const auto& m : marginal_list(j)) out.push_back(radial_from_json(m));
  if (out.empty()) throw ContractViolation("no marginals given");
  return out;
}

// --- solver / radial artifacts -----------------------------------------------

JValue to_json(const PotentialSet& potentials) {
  JValue j = JValue::object();
  j.set("type", JValue::string("potentials"));
  JValue tables = JValue::array();
  for (const auto& t : potentials.tables) tables.push(vec_to_json(t));
  j.set("tables", std::move(tables));
  return j;
}

PotentialSet potentials_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tables"))
    throw ContractViolation("expected a potentials object");
  PotentialSet p;
  for (const auto& t : j.at("tables"))
    p.tables.push_back(doubles_from_json(t, "potential table"));
  return p;
}

JValue to_json(const SolveReport& report, Objective objective) {
  JValue j = JValue::object();
  j.set("objective",
        JValue::string(objective == Objective::Det ? "det" : "absdet"));
  j.set("primal_value", JValue::number(report.primal_value));
  j.set("dual_value", JValue::number(report.dual_value));
  j.set("gap", JValue::number(report.gap));
  j.set("pivots", JValue::integer(report.pivots));
  JValue entries = JValue::array();
  for (const auto& e : report.plan.entries) {
    JValue pair = JValue::array();
    JValue idx = JValue::array();
    for (int v : e.index) idx.push(JValue::integer(v));
    pair.push(std::move(idx));
    pair.push(JValue::number(e.mass));
    entries.push(std::move(pair));
  }
  JValue plan = JValue::object();
  JValue shape = JValue::array();
  for (int s : report.plan.shape) shape.push(JValue::integer(s));
  plan.set("shape", std::move(shape));
  plan.set("entries", std::move(entries));
  j.set("plan", std::move(plan));
  j.set("potentials", to_json(report.potentials));
  return j;
}

JValue to_json(const RadialSolution& solution) {
  JValue j = JValue::object();
  j.set("type", JValue::string("radial_solution"));
  j.set("d", JValue::integer(solution.d));
  j.set("value", JValue::number(solution.value));
  JValue maps = JValue::array();
  for (const auto& m : solution.maps) {
    JValue mj = JValue::object();
    mj.set("r", vec_to_json(m.knots_r()));
    mj.set("h", vec_to_json(m.values()));
    maps.push(std::move(mj));
  }
  j.set("maps", std::move(maps));
  JValue pots = JValue::array();
  for (const auto& p : solution.potentials) {
    JValue pj = JValue::object();
    pj.set("r", vec_to_json(p.r));
    pj.set("value", vec_to_json(p.value));
    pj.set("slope", vec_to_json(p.slope));
    pots.push(std::move(pj));
  }
  j.set("potentials", std::move(pots));
  return j;
}

RadialSolution solution_from_json(const nlohmann::json& input) {
  const nlohmann::json* jp = &input;
  if (input.is_object() && input.contains("solution")) jp = &input.at("solution");
  const nlohmann::json& j = *jp;
  if (!j.is_object() || j.value("type", "") != std::string("radial_solution"))
    throw ContractViolation("expected a radial_solution object");
  RadialSolution sol;
  sol.d = j.at("d").get<int>();
  sol.value = j.at("value").get<double>();
  for (const auto& mj : j.at("maps"))
    sol.maps.emplace_back(doubles_from_json(mj.at("r"), "map knots"),
                          doubles_from_json(mj.at("h"), "map values"));
  for (const auto& pj : j.at("potentials")) {
    RadialPotential p;
    p.r = doubles_from_json(pj.at("r"), "potential knots");
    p.value = doubles_from_json(pj.at("value"), "potential values");
    p.slope = doubles_from_json(pj.at("slope"), "potential slopes");
    if (p.r.size() != p.value.size() || p.r.size() != p.slope.size())
      throw ContractViolation("radial_solution: ragged potential tables");
    sol.potentials.push_back(std::move(p));
  }
  if (static_cast<int>(sol.potentials.size()) != sol.d ||
      static_cast<int>(sol.maps.size()) != sol.d - 1)
    throw ContractViolation("radial_solution: wrong table counts for d");
  return sol;
}

JValue to_json(const CertificateReport& report) {
  JValue j = JValue::object();
  j.set("passed", JValue::boolean(report.passed));
  j.set("max_feasibility_violation",
        JValue::number(report.max_feasibility_violation));
  j.set("max_tightness_gap", JValue::number(report.max_tightness_gap));
  j.set("max_subgradient_residual",
        JValue::number(report.max_subgradient_residual));
  JValue conds = JValue::array();
  for (const auto& c : report.conditions) {
    JValue cj = JValue::object();
    cj.set("name", JValue::string(c.name));
    cj.set("residual", JValue::number(c.residual));
    cj.set("tolerance", JValue::number(c.tolerance));
    cj.set("passed", JValue::boolean(c.passed));
    cj.set("checked", JValue::integer(c.checked));
    cj.set("skipped", JValue::integer(c.skipped));
    if (!c.detail.empty()) cj.set("detail", JValue::string(c.detail));
    conds.push(std::move(cj));
  }
  j.set("conditions", std::move(conds));
  return j;
}

JValue to_json(const FubiniResult& result) {
  JValue j = JValue::object();
  j.set("fn", JValue::string(result.fn));
  j.set("lhs", JValue::number(result.lhs));
  j.set("rhs", JValue::number(result.rhs));
  j.set("stderr", JValue::number(result.stderr_pooled));
  j.set("passed", JValue::boolean(result.passed));
  return j;
}

JValue to_json(const MarginalTestReport& report) {
  JValue j = JValue::object();
  j.set("n", JValue::integer(report.n));
  j.set("ks_statistic", JValue::number(report.ks_statistic));
  j.set("ks_pvalue", JValue::number(report.ks_pvalue));
  j.set("radii_passed", JValue::boolean(report.radii_passed));
  j.set("directions_checked", JValue::boolean(report.directions_checked));
  if (report.directions_checked) {
    j.set("mean_direction_norm", JValue::number(report.mean_direction_norm));
    j.set("mean_direction_threshold",
          JValue::number(report.mean_direction_threshold));
    j.set("coord_variance", [&] {
      JValue a = JValue::array();
      for (double v : report.coord_variance) a.push(JValue::number(v));
      return a;
    }());
    j.set("coord_variance_band", JValue::number(report.coord_variance_band));
    j.set("directions_passed", JValue::boolean(report.directions_passed));
  }
  j.set("passed", JValue::boolean(report.passed));
  return j;
}

// --- sample CSV ----------------------------------------------------------------

CsvSampleWriter::CsvSampleWriter(std::string path, int d)
    : path_(std::move(path)), tmp_path_(path_ + ".tmp"), d_(d) {
  std::FILE* f = std::fopen(tmp_path_.c_str(), "wb");
  if (!f) throw ContractViolation("cannot open output file: " + tmp_path_);
  file_ = f;
  buffer_.reserve(1 << 22);
  for (int i = 0; i < d_; ++i)
    for (int c = 0; c < d_; ++c) {
      if (i || c) buffer_.push_back(',');
      buffer_ += "x" + std::to_string(i + 1) + "_" + std::to_string(c + 1);
    }
  buffer_ += ",det\n";
}

CsvSampleWriter::~CsvSampleWriter() {
  if (!closed_ && file_) {
    std::fclose(static_cast<std::FILE*>(file_));
    std::remove(tmp_path_.c_str());
  }
}

void CsvSampleWriter::flush() {
  std::FILE* f = static_cast<std::FILE*>(file_);
  if (!buffer_.empty()) {
    if (std::fwrite(buffer_.data(), 1, buffer_.size(), f) != buffer_.size())
      throw InternalError("short write to " + tmp_path_);
    buffer_.clear();
  }
}

void CsvSampleWriter::write_tuple(std::span<const double> tuple,
                                  double det_value) {
  char num[64];
  for (double v : tuple) {
    const auto res = std::to_chars(num, num + sizeof(num), v);
    buffer_.append(num, res.ptr);
    buffer_.push_back(',');
  }
  const auto res = std::to_chars(num, num + sizeof(num), det_value);
  buffer_.append(num, res.ptr);
  buffer_.push_back('\n');
  if (buffer_.size() > (1 << 22) - 4096) flush();
}

void CsvSampleWriter::close() {
  if (closed_) return;
  flush();
  std::fclose(static_cast<std::FILE*>(file_));
  file_ = nullptr;
  closed_ = true;
  std::filesystem::rename(tmp_path_, path_);
}

SampleSet read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open samples file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ContractViolation("samples file is empty (missing header)");
  int columns = 1;
  for (char c : line) columns += c == ',';
  // header is x1_1..xd_d,det
  int d = 0;
  while ((d + 1) * (d + 1) + 1 <= columns) ++d;
  if (d < 2 || d * d + 1 != columns)
    throw ContractViolation("samples file: header does not look like tuples");
  SampleSet set;
  set.d = d;
  std::vector<double> row(static_cast<std::size_t>(columns));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int c = 0; c < columns; ++c) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc())
        throw ContractViolation("samples file: malformed number");
      row[static_cast<std::size_t>(c)] = v;
      p = res.ptr;
      if (c + 1 < columns) {
        if (p >= end || *p != ',')
          throw ContractViolation("samples file: malformed row");
        ++p;
      }
    }
    set.data.insert(set.data.end(), row.begin(), row.end() - 1);  // drop det
  }
  return set;
}

}  // namespace detmmot
