#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "detmmot/lp.hpp"
#include "detmmot/optcheck.hpp"
#include "detmmot/radial.hpp"

#include <json.hpp>

namespace detmmot {

// Minimal JSON value tree with deterministic serialization: object keys keep
// insertion order and every double renders with 17 significant digits, so
// emitted files are byte-stable and parse back bit-exact.
class JValue {
 public:
  JValue() : kind_(Kind::Null) {}
  static JValue null() { return JValue(); }
  static JValue boolean(bool b);
  static JValue integer(std::int64_t v);
  static JValue number(double v);
  static JValue string(std::string s);
  static JValue array();
  static JValue object();

  void push(JValue v);                      // array
  void set(std::string key, JValue v);      // object

  std::string dump(int indent = 0) const;

 private:
  enum class Kind { Null, Bool, Int, Double, String, Array, Object };
  void write(std::string& out, int indent, int depth) const;

  Kind kind_;
  bool bool_ = false;
  std::int64_t int_ = 0;
  double double_ = 0.0;
  std::string str_;
  std::vector<JValue> items_;
  std::vector<std::pair<std::string, JValue>> fields_;
};

// Renders with %.17g semantics; throws InternalError on non-finite values.
std::string format_double_17(double v);

// --- file helpers ----------------------------------------------------------

nlohmann::json read_json_file(const std::string& path);
// Write-then-rename so failed runs leave no partial output.
void atomic_write_file(const std::string& path, const std::string& content);

// --- measures ---------------------------------------------------------------

JValue to_json(const DiscreteMeasure& mu);
JValue to_json(const RadialMeasure& mu);
DiscreteMeasure discrete_from_json(const nlohmann::json& j);
RadialMeasure radial_from_json(const nlohmann::json& j);

// Array (or {"marginals": [...]}) of measures of one kind.
std::vector<DiscreteMeasure> discrete_marginals_from_json(const nlohmann::json& j);
std::vector<RadialMeasure> radial_marginals_from_json(const nlohmann::json& j);

// --- solver / radial artifacts ----------------------------------------------

JValue to_json(const PotentialSet& potentials);
PotentialSet potentials_from_json(const nlohmann::json& j);

JValue to_json(const SolveReport& report, Objective objective);

JValue to_json(const RadialSolution& solution);
RadialSolution solution_from_json(const nlohmann::json& j);

JValue to_json(const CertificateReport& report);
JValue to_json(const FubiniResult& result);
JValue to_json(const MarginalTestReport& report);

// --- sample CSV ---------------------------------------------------------------

// Streaming writer for sample tuples; header row x1_1,...,xd_d,det. The file
// appears atomically on close().
class CsvSampleWriter {
 public:
  CsvSampleWriter(std::string path, int d);
  ~CsvSampleWriter();
  void write_tuple(std::span<const double> tuple, double det_value);
  void close();

 private:
  std::string path_, tmp_path_;
  std::string buffer_;
  int d_;
  void* file_ = nullptr;
  bool closed_ = false;
  void flush();
};

SampleSet read_samples_csv(const std::string& path);

}  // namespace detmmot
