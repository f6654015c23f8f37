#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graphon/error.hpp"
#include "graphon/estimator.hpp"
#include "graphon/evaluation.hpp"
#include "graphon/graph.hpp"
#include "graphon/graphon_model.hpp"
#include "graphon/moment_poly.hpp"
#include "graphon/nonbacktracking.hpp"
#include "graphon/star_counts.hpp"
#include "json.hpp"

namespace graphon {

/// Stages in execution order. The value doubles as the process exit code
/// when the stage fails.
enum class Stage : int {
  Config = 2,
  Generate = 10,
  Spectrum = 11,
  Moments = 12,
  Fit = 13,
  Estimate = 14,
  Evaluate = 15,
};

std::string stage_name(Stage stage);
std::optional<Stage> stage_from_name(const std::string& name);

class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& what)
      : Error(stage_name(stage) + ": " + what), stage_(stage) {}
  Stage stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return static_cast<int>(stage_); }

 private:
  Stage stage_;
};

struct PipelineConfig {
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  double e0 = 0.1;
  /// Kernel bound; the model's largest entry when absent.
  std::optional<double> M;
  std::optional<double> epsilon_override;
  std::optional<double> e1_override;
  std::optional<unsigned> N_override;
  std::optional<double> delta_override;
  std::optional<std::size_t> m_override;
  std::size_t K_cap = 8;
  unsigned N_cap = 4;
  double delta_floor = 0.05;
  /// Per-axis resolution for normalizing and grid-sampling h_N^+.
  std::size_t density_grid = 128;
  /// Grid for delta_2 and L2 metrics.
  std::size_t eval_grid = 256;
  double spectrum_tol = 1e-10;
  std::size_t max_restarts = 3000;
  bool ihara_bass = false;
  std::size_t moment_table_cap = std::size_t{1} << 20;
  /// Scaled mode: the model is multiplied by h and the estimate divided by h.
  double h = 1.0;
  std::vector<double> h_ladder{1.0, 2.0, 4.0, 8.0};
  bool deterministic = false;
  unsigned threads = 1;
  std::optional<StepGraphon> model;
  std::filesystem::path model_path;
  /// Empty: keep everything in memory.
  std::filesystem::path out_dir;

  /// Throws InvalidArgument on a violated invariant.
  void validate() const;
};

/// Reads JSON mirroring PipelineConfig. "model" is either an inline graphon
/// object or a path, resolved against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Every field that affects results, with the model inline. Thread count,
/// determinism flag and paths are left out.
nlohmann::json canonical_config(const PipelineConfig& cfg);
std::string config_hash(const PipelineConfig& cfg);

/// 1 / log log n before clamping.
double epsilon_formula(std::size_t n);
/// log10 of (2 K M / e0)^{6K + 30}.
double N_formula_log10(std::size_t K, double M, double e0);
/// sqrt(e0 / (64 K lambda_1 M^2)).
double delta_formula(double e0, std::size_t K, double lambda1, double M);

/// Everything a run produces. Fields fill in stage by stage.
struct RunState {
  std::string config_hash;
  StepGraphon model{{1.0}, Eigen::MatrixXd::Zero(1, 1)};
  SpectralGraphon truth;
  double M = 0.0;

  std::optional<SparseGraph> graph;
  LatentAssignment latents;
  std::optional<SparseGraph> g1;
  std::optional<SparseGraph> g2;
  double epsilon = 0.0;
  double mean_degree = 0.0;

  /// Eigenvectors are only present after an in-memory spectrum stage.
  std::optional<NbSpectrum> spectrum;
  /// Spectrum eigenvalues divided by 1 - epsilon.
  std::vector<double> lambdas;

  std::optional<MomentTable> table;
  unsigned N = 0;

  std::optional<DensityFit> fit;
  double delta = 0.0;
  double kappa = 0.0;

  std::optional<GraphonEstimate> estimate;
  SampleReport sample_report;

  std::optional<AlignmentReport> alignment;
  std::optional<GridDistance> l2;
  std::optional<Diagnostics> diagnostics;
  double fraction_negative = 0.0;

  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, double>> stage_seconds;
  nlohmann::json metrics;
  nlohmann::json manifest;

  std::size_t K() const { return spectrum ? spectrum->K : 0; }
};

/// Seeds the state from the config: model (scaled by h), truth, M, hash.
RunState prepare(const PipelineConfig& cfg);

/// One stage on in-memory inputs. Writes the stage dumps when out_dir is set.
void run_stage(Stage stage, const PipelineConfig& cfg, RunState& state);

/// Loads what `stage` consumes from out_dir, refusing dumps made under a
/// different config hash (ConfigMismatch).
void load_stage_inputs(Stage stage, const PipelineConfig& cfg, RunState& state);

/// generate -> spectrum -> moments -> fit -> estimate -> evaluate, then the
/// manifest. Stage failures surface as StageError.
RunState run_pipeline(const PipelineConfig& cfg);

struct ScaledRow {
  double h = 1.0;
  std::size_t K = 0;
  double delta2_upper = 0.0;
  double l2_grid = 0.0;
  bool degenerate = false;
};

/// run_pipeline with the model scaled by each h in the ladder and the
/// estimate divided by h, measured against the unscaled truth. Runs go to
/// out_dir/h_<h>; the table goes to out_dir/scaled.json.
std::vector<ScaledRow> run_scaled(const PipelineConfig& cfg);
RunState run_scaled_single(const PipelineConfig& cfg, double h);

/// Copy of j without wall-time fields, for comparisons that must ignore
/// timing.
nlohmann::json strip_timing(const nlohmann::json& j);

}  // namespace graphon
