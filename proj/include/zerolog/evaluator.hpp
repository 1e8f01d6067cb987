#pragma once

// Session-level detection, metrics, and the experiment harnesses built on
// them (ablation, sensitivity sweeps, inference timing).

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zerolog/checkpoint.hpp"
#include "zerolog/corpus.hpp"
#include "zerolog/datasets.hpp"
#include "zerolog/embedder.hpp"
#include "zerolog/meta_trainer.hpp"

namespace zerolog::eval {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct MetricsReport {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  ConfusionCounts counts;
  double threshold = 0.5;
  std::string checkpoint_id;
};

/// Predicted and gold labels are 0 (normal) / 1 (anomalous). Zero
/// denominators give 0. Arity mismatch or a gold label outside {0,1} ->
/// Error(Input).
MetricsReport compute_metrics(std::span<const int> predicted, std::span<const int> gold);

/// Key/value lines; metrics and threshold with 6 decimals.
void write_report(std::ostream& out, const MetricsReport& report);
MetricsReport read_report(std::istream& in);

struct Detection {
  std::vector<double> probabilities;
  std::vector<int> labels;
  std::uint64_t unresolved = 0;
};

/// label = 1 iff probability >= threshold.
Detection detect(const nn::NetworkConfig& network, const nn::NetworkParams<double>& params,
                 const Eigen::MatrixXd& inputs, std::span<const Sequence> sequences, double threshold);

/// Sessions of one system against a checkpoint. Template ids missing from the
/// embedding table fall back to the OOV policy and are counted.
Detection detect(std::span<const parser::Session> sessions, std::string_view system,
                 const embed::GlobalEmbeddings& embeddings, const nn::Checkpoint& checkpoint,
                 double threshold, const embed::EmbeddingConfig& oov = {});

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentConfig {
  nn::NetworkConfig network;
  train::Hyperparams hp;
  double threshold = 0.5;
  /// Share of the source corpus (label-stratified) and of the target corpus
  /// (uniform, label-blind) given to the trainer. Evaluation always covers
  /// the whole target corpus.
  double source_fraction = 1.0;
  double target_fraction = 1.0;
  /// false: source-only training, no target session reaches the trainer
  /// (requires beta = 0).
  bool use_target = true;
  std::uint64_t split_seed = 11;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

struct TrainedModel {
  nn::Checkpoint checkpoint;
  std::string curve;
  std::size_t iterations = 0;
};

/// Training only (subsampled per the fractions); no gold labels involved.
TrainedModel train_model(const TrainingData& data, const ExperimentConfig& config,
                         const train::TrainOptions& options = {});

struct RunResult {
  nn::Checkpoint checkpoint;
  MetricsReport report;
  std::vector<double> probabilities;  // per target session
  std::string curve;                  // training curve text
  std::size_t iterations = 0;
};

/// Trains on `data.training` (subsampled per the fractions) and evaluates on
/// every target session. Gold labels are read once, after training.
RunResult run_experiment(const data::CrossSystemData& data, const ExperimentConfig& config,
                         const train::TrainOptions& options = {});

struct AblationResult {
  RunResult full;
  RunResult without_meta;  // inner_steps = 0
};

AblationResult run_ablation(const data::CrossSystemData& data, const ExperimentConfig& config);

enum class SweepAxis { Beta, Gamma, SourceFraction, TargetFraction };

SweepAxis sweep_axis_from_string(std::string_view name);
std::string_view to_string(SweepAxis axis);

struct SweepResult {
  SweepAxis axis = SweepAxis::Beta;
  std::vector<double> values;
  std::vector<MetricsReport> reports;  // one per value
};

/// One independent run per value, everything else fixed. Empty `values` ->
/// Error(Config).
SweepResult run_sweep(const data::CrossSystemData& data, const ExperimentConfig& config, SweepAxis axis,
                      std::span<const double> values);

/// `axis_value\tprecision\trecall\tf1` rows under a header line.
void write_sweep(std::ostream& out, const SweepResult& sweep);

struct LatencyStats {
  double mean_ms = 0;
  double median_ms = 0;
  double p99_ms = 0;
  std::size_t samples = 0;
};

/// Per-sequence wall-clock latency over `repetitions` passes, after one
/// warm-up pass.
LatencyStats measure_inference(const nn::NetworkConfig& network, const nn::NetworkParams<double>& params,
                               const Eigen::MatrixXd& inputs, std::span<const Sequence> sequences,
                               std::size_t repetitions);

}  // namespace zerolog::eval
