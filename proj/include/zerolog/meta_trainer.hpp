#pragma once

// Adversarial domain adaptation nested in a meta-learning loop.
//
// One outer iteration:
//   1. sample a batch of meta-tasks (source split + target split, each cut
//      into support and query)
//   2. domain head: gradient ascent on the adversarial loss over supports
//   3. anomaly head: gradient descent on the classification loss over supports
//   4. per task: adapt the feature extractor on its support with plain
//      gradient steps on gamma * L_c + beta * L_ad
//   5. feature extractor: descent on the summed query task losses evaluated
//      at the adapted parameters

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "zerolog/corpus.hpp"
#include "zerolog/network.hpp"
#include "zerolog/optimizer.hpp"
#include "zerolog/rng.hpp"

namespace zerolog::train {

using nn::NetworkConfig;
using Params = nn::NetworkParams<double>;
using Vector = nn::Vec<double>;

enum class Optimizer {
  Adam,  // moment-based steps for both heads and the outer extractor step
  Sgd,   // literal theta +/- rate * gradient
};

struct Hyperparams {
  double delta = 0.1;           // inner adaptation rate
  double lambda_d = 3e-3;       // domain head rate
  double kappa = 3e-3;          // anomaly head rate
  double alpha = 1.0;           // meta step size
  double beta = 2.0;            // adversarial weight
  double gamma = 2.5;           // classification weight
  double learning_rate = 3e-3;  // base rate of the outer Adam step (scaled by alpha)
  std::size_t batch_size = 256; // sessions per split, per domain
  std::size_t inner_steps = 1;
  std::size_t meta_batch = 2;
  bool first_order = true;
  double support_ratio = 0.5;
  Optimizer optimizer = Optimizer::Adam;
  std::size_t max_iterations = 300;
  std::size_t patience = 10;       // 0 disables early stopping
  double holdout_fraction = 0.1;   // of the source corpus, for early stopping
  std::uint64_t seed = 7;          // parameter init and task sampling

  void validate() const;
  nn::TaskWeights weights() const { return {gamma, beta}; }
};

nlohmann::json to_json(const Hyperparams& h);
/// Unknown keys -> Error(Config). Missing keys keep their defaults.
Hyperparams hyperparams_from_json(const nlohmann::json& j);

/// Indices into the source / target corpora.
struct MetaTask {
  std::vector<std::size_t> support_source;
  std::vector<std::size_t> support_target;
  std::vector<std::size_t> query_source;
  std::vector<std::size_t> query_target;
};

/// Cuts both corpora into splits of `split_size` sessions and hands them out
/// without replacement; a new seeded permutation starts each epoch. Source
/// and target run independent epochs.
class TaskSampler {
 public:
  /// `source_ids` / `target_ids` are the corpus indices eligible for tasks.
  TaskSampler(std::vector<std::size_t> source_ids, std::vector<std::size_t> target_ids,
              std::size_t split_size, double support_ratio, std::uint64_t seed);

  std::vector<MetaTask> sample(std::size_t k);

  std::size_t source_splits() const { return source_.splits; }
  std::size_t target_splits() const { return target_.splits; }

 private:
  struct Stream {
    std::vector<std::size_t> ids;
    std::size_t splits = 0;
    std::size_t next = 0;  // next split within the current epoch
    std::vector<std::size_t> order;
  };

  std::vector<std::size_t> next_split(Stream& s);

  Stream source_;
  Stream target_;
  double support_ratio_;
  Rng rng_;
};

struct HistoryEntry {
  std::size_t iteration = 0;
  double l_c = 0;
  double l_ad = 0;
  double l_task_mean = 0;
  double query_loss = 0;
  double holdout_loss = 0;
};

struct TrainState {
  NetworkConfig network;
  Params params;
  nn::AdamState<double> opt_e, opt_omega, opt_d;
  std::size_t iteration = 0;
  std::vector<HistoryEntry> history;
  std::size_t consecutive_skips = 0;

  static TrainState initial(const NetworkConfig& network, std::uint64_t seed);
};

/// Everything an outer iteration needs to read.
struct TaskContext {
  const TrainingData* data = nullptr;
  const Hyperparams* hp = nullptr;
};

nn::Batch<double> support_batch(const TrainingData& data, const MetaTask& task,
                                bool with_target = true);
nn::Batch<double> query_batch(const TrainingData& data, const MetaTask& task);
/// Support and query pooled.
nn::Batch<double> pooled_batch(const TrainingData& data, const MetaTask& task);

/// theta_d <- theta_d + lambda * sum_i grad L_ad(support_i). Returns the
/// summed gradient.
Vector update_domain_classifier(TrainState& state, std::span<const MetaTask> tasks,
                                const TaskContext& ctx);

/// theta_omega <- theta_omega - kappa * sum_i grad L_c(support_i); only the
/// labeled source side of each support is read.
Vector update_anomaly_classifier(TrainState& state, std::span<const MetaTask> tasks,
                                 const TaskContext& ctx);

/// `inner_steps` plain gradient steps on the task loss over the support,
/// heads held fixed. Returns the adapted extractor; `params` is untouched.
Vector inner_adapt(const NetworkConfig& network, const Params& params, const MetaTask& task,
                   const TaskContext& ctx, double* support_loss = nullptr);

struct MetaUpdateResult {
  Vector gradient;          // summed meta-gradient applied to theta_e
  double query_loss = 0;    // mean task loss on the queries at adapted params
};

/// theta_e <- theta_e - alpha * sum_i grad L_task(query_i; theta_e^i).
/// first_order: the gradient is taken at theta_e^i. Otherwise it is carried
/// back through the inner steps with Hessian-vector products.
/// With inner_steps == 0 the step becomes joint descent on the pooled
/// support + query batch at theta_e.
MetaUpdateResult meta_update(TrainState& state, std::span<const MetaTask> tasks,
                             std::span<const Vector> adapted, const TaskContext& ctx);

struct TrainOptions {
  /// Receives one `iter\tl_c\tl_ad\tl_task_mean\tquery_loss` line per outer
  /// iteration.
  std::ostream* curve = nullptr;
  /// Skipped-step notices.
  std::function<void(std::string_view)> on_warning;
  /// Called after every outer iteration.
  std::function<void(const TrainState&)> on_iteration;
};

/// Runs outer iterations until max_iterations or early stop. Throws
/// NumericError after three consecutive skipped steps.
TrainState train(TrainState state, const TrainingData& data, const Hyperparams& hp,
                 const TrainOptions& options = {});

/// Hessian-vector product of the task loss on `batch` w.r.t. theta_e, by
/// central differences of the analytic gradient.
Vector hessian_vector_product(const NetworkConfig& network, const Params& params,
                              const nn::Batch<double>& batch, const Vector& v,
                              nn::TaskWeights weights);

}  // namespace zerolog::train
