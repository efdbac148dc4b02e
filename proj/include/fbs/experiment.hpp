#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbs/error.hpp"
#include "fbs/grid.hpp"
#include "fbs/minimize.hpp"

namespace fbs {

inline constexpr const char* kSchema = "fbslab/1";

/// A pipeline stage failed; carries the stage name.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct GridConfig {
  int dim = 1;
  Index nodes{33, 1, 1};
  Point lower{-1, -1, -1};
  Point upper{1, 1, 1};

  Grid build() const;
};

struct FieldsConfig {
  nlohmann::json A = {{"type", "identity"}};
  double mu = 1.0;
  nlohmann::json lambda = {{"type", "const"}, {"value", 1.0}};
  double lambda_cap = 1.0;
  nlohmann::json gamma = {{"type", "const"}, {"value", 1.0}};
  double gamma_star = 1.0;
  nlohmann::json phi = {{"type", "const"}, {"value", 0.0}};
};

struct EstimatorConfig {
  Point x0{0, 0, 0};
  /// "free_boundary": the zero-side free-boundary node nearest x0; "given": x0 itself.
  std::string center = "free_boundary";
  int k_max = 0;  // 0: finest resolvable level
  int k_min = 2;
  double min_radius_cells = 4.0;
  double floor = 0.0;      // 0: 10 * solver.tol_node
  double threshold = 0.0;  // 0: 10 * solver.tol_node
  double growth_tolerance = 0.08;
  std::vector<double> radii;  // empty: 1/4, 1/8, ..., while >= 4h (at most 6)
  std::string source = "minimizer";  // holder: "minimizer" or "phi"
  double rho_target = 0.25;
  double nu0 = 0.25;
  nlohmann::json omega = {{"kind", "zero"}};
  Point ball_center{0, 0, 0};
  double ball_radius = 0.5;
  double inner_radius = 0.25;
  double tol_lin = 1e-10;
  int dini_k_max = 256;
  int competitors = 20;
  std::vector<Point> points;  // repel: probe points (empty: x0)
};

struct FlatnessMember {
  std::string label;
  nlohmann::json phi;
  nlohmann::json A;  // null: fields.A
};

struct FlatnessConfig {
  std::vector<FlatnessMember> family;
  double s0 = 1.0;
  int max_doublings = 30;
  int bisection_steps = 12;
};

struct SweepConfig {
  std::string kind = "solve";
  std::string key;
  std::vector<nlohmann::json> values;
};

struct ExperimentConfig {
  std::string schema = kSchema;
  std::string kind = "solve";
  std::uint64_t seed = 0;
  std::string output = "fbslab-out";
  GridConfig grid;
  FieldsConfig fields;
  MinimizeOptions solver;
  EstimatorConfig estimators;
  FlatnessConfig flatness;
  SweepConfig sweep;

  /// Parses and validates; throws ConfigError naming the offending path.
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// Complete form with every default filled in; from_json(to_json()) reproduces it.
  nlohmann::json to_json() const;
};

/// Applies "a.b.c=value" overrides to a raw config document. The value is
/// parsed as JSON when possible and kept as a string otherwise; numeric path
/// components index arrays.
void apply_override(nlohmann::json& doc, const std::string& assignment);

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

struct Invariant {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunSummary {
  std::string kind;
  std::string output;
  bool complete = false;
  std::vector<Invariant> invariants;
  nlohmann::json report;

  bool all_passed() const;
};

/// Runs the pipeline for config.kind and writes the bundle into config.output:
/// config.json, report.json, CSV tables, field dumps and metadata.json (the only
/// file holding timestamps). Stage failures write an incomplete report and
/// rethrow as PipelineError.
RunSummary run_experiment(const ExperimentConfig& config);

/// Reads report.json of a bundle.
RunSummary read_bundle(const std::string& dir);

/// One line per invariant plus a header.
std::string format_summary(const RunSummary& s);

}  // namespace fbs
