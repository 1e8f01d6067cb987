#include "zerolog/meta_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "zerolog/error.hpp"

namespace zerolog::train {

using nn::Group;
using nn::GroupMask;
using nn::Loss;

// ---------------------------------------------------------------------------
// Hyperparams

void Hyperparams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::Config, std::string(name) + " must be > 0");
  };
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::Config, std::string(name) + " must be >= 0");
  };
  // Rates may be zero (identity steps); negative rates flip the algorithm.
  non_negative(delta, "delta");
  non_negative(lambda_d, "lambda_d");
  non_negative(kappa, "kappa");
  non_negative(alpha, "alpha");
  non_negative(beta, "beta");
  non_negative(gamma, "gamma");
  positive(learning_rate, "learning_rate");
  if (batch_size < 2) throw Error(ErrorKind::Config, "batch_size must be >= 2");
  if (meta_batch < 1) throw Error(ErrorKind::Config, "meta_batch must be >= 1");
  if (!(support_ratio > 0.0 && support_ratio < 1.0))
    throw Error(ErrorKind::Config, "support_ratio must be in (0, 1)");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
    throw Error(ErrorKind::Config, "holdout_fraction must be in [0, 1)");
}

nlohmann::json to_json(const Hyperparams& h) {
  return {{"delta", h.delta},
          {"lambda_d", h.lambda_d},
          {"kappa", h.kappa},
          {"alpha", h.alpha},
          {"beta", h.beta},
          {"gamma", h.gamma},
          {"learning_rate", h.learning_rate},
          {"batch_size", h.batch_size},
          {"inner_steps", h.inner_steps},
          {"meta_batch", h.meta_batch},
          {"first_order", h.first_order},
          {"support_ratio", h.support_ratio},
          {"optimizer", h.optimizer == Optimizer::Adam ? "adam" : "sgd"},
          {"max_iterations", h.max_iterations},
          {"patience", h.patience},
          {"holdout_fraction", h.holdout_fraction},
          {"seed", h.seed}};
}

Hyperparams hyperparams_from_json(const nlohmann::json& j) {
  Hyperparams h;
  if (!j.is_object()) throw Error(ErrorKind::Config, "hyperparameters must be an object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "delta") h.delta = value.get<double>();
      else if (key == "lambda_d") h.lambda_d = value.get<double>();
      else if (key == "kappa") h.kappa = value.get<double>();
      else if (key == "alpha") h.alpha = value.get<double>();
      else if (key == "beta") h.beta = value.get<double>();
      else if (key == "gamma") h.gamma = value.get<double>();
      else if (key == "learning_rate") h.learning_rate = value.get<double>();
      else if (key == "batch_size") h.batch_size = value.get<std::size_t>();
      else if (key == "inner_steps") h.inner_steps = value.get<std::size_t>();
      else if (key == "meta_batch") h.meta_batch = value.get<std::size_t>();
      else if (key == "first_order") h.first_order = value.get<bool>();
      else if (key == "support_ratio") h.support_ratio = value.get<double>();
      else if (key == "optimizer") {
        const auto name = value.get<std::string>();
        if (name == "adam") h.optimizer = Optimizer::Adam;
        else if (name == "sgd") h.optimizer = Optimizer::Sgd;
        else throw Error(ErrorKind::Config, "optimizer must be adam or sgd");
      } else if (key == "max_iterations") h.max_iterations = value.get<std::size_t>();
      else if (key == "patience") h.patience = value.get<std::size_t>();
      else if (key == "holdout_fraction") h.holdout_fraction = value.get<double>();
      else if (key == "seed") h.seed = value.get<std::uint64_t>();
      else throw Error(ErrorKind::Config, "unknown training key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, "training key '" + key + "': " + e.what());
    }
  }
  h.validate();
  return h;
}

// ---------------------------------------------------------------------------
// TaskSampler

TaskSampler::TaskSampler(std::vector<std::size_t> source_ids, std::vector<std::size_t> target_ids,
                         std::size_t split_size, double support_ratio, std::uint64_t seed)
    : support_ratio_(support_ratio), rng_(seed) {
  if (split_size < 2) throw Error(ErrorKind::Config, "split size must be >= 2");
  if (source_ids.size() < split_size)
    throw Error(ErrorKind::Config, "source corpus smaller than one split");
  if (!target_ids.empty() && target_ids.size() < split_size)
    throw Error(ErrorKind::Config, "target corpus smaller than one split");
  source_.ids = std::move(source_ids);
  source_.splits = source_.ids.size() / split_size;
  target_.ids = std::move(target_ids);
  target_.splits = target_.ids.size() / split_size;
}

std::vector<std::size_t> TaskSampler::next_split(Stream& s) {
  if (s.splits == 0) return {};
  if (s.next == 0) {
    s.order = s.ids;
    shuffle<std::size_t>(s.order, rng_);
  }
  // Even partition: every id of the epoch lands in exactly one split.
  const std::size_t n = s.order.size();
  const std::size_t begin = s.next * n / s.splits;
  const std::size_t end = (s.next + 1) * n / s.splits;
  s.next = (s.next + 1) % s.splits;
  return {s.order.begin() + static_cast<std::ptrdiff_t>(begin),
          s.order.begin() + static_cast<std::ptrdiff_t>(end)};
}

std::vector<MetaTask> TaskSampler::sample(std::size_t k) {
  std::vector<MetaTask> tasks;
  tasks.reserve(k);
  auto cut = [&](const std::vector<std::size_t>& split, std::vector<std::size_t>& support,
                 std::vector<std::size_t>& query) {
    if (split.empty()) return;
    auto n_support = static_cast<std::size_t>(std::floor(support_ratio_ * static_cast<double>(split.size())));
    n_support = std::clamp<std::size_t>(n_support, 1, split.size() - 1);
    support.assign(split.begin(), split.begin() + static_cast<std::ptrdiff_t>(n_support));
    query.assign(split.begin() + static_cast<std::ptrdiff_t>(n_support), split.end());
  };
  for (std::size_t i = 0; i < k; ++i) {
    MetaTask task;
    cut(next_split(source_), task.support_source, task.query_source);
    cut(next_split(target_), task.support_target, task.query_target);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

// ---------------------------------------------------------------------------
// Batches

namespace {

void add_source(nn::Batch<double>& b, const TrainingData& data,
                const std::vector<std::size_t>& ids) {
  for (auto i : ids) {
    b.source.emplace_back(data.source.sequences[i]);
    b.source_labels.push_back(data.source.labels[i]);
  }
}

void add_target(nn::Batch<double>& b, const TrainingData& data,
                const std::vector<std::size_t>& ids) {
  for (auto i : ids) b.target.emplace_back(data.target.sequences[i]);
}

Params with_extractor(const Params& p, const Vector& theta_e) {
  Params out = p;
  out.theta_e = theta_e;
  return out;
}

const Hyperparams& hp_of(const TaskContext& ctx) {
  if (ctx.data == nullptr || ctx.hp == nullptr)
    throw Error(ErrorKind::Config, "task context is incomplete");
  return *ctx.hp;
}

}  // namespace

nn::Batch<double> support_batch(const TrainingData& data, const MetaTask& task, bool with_target) {
  nn::Batch<double> b;
  b.inputs = &data.inputs;
  add_source(b, data, task.support_source);
  if (with_target) add_target(b, data, task.support_target);
  return b;
}

nn::Batch<double> query_batch(const TrainingData& data, const MetaTask& task) {
  nn::Batch<double> b;
  b.inputs = &data.inputs;
  add_source(b, data, task.query_source);
  add_target(b, data, task.query_target);
  return b;
}

nn::Batch<double> pooled_batch(const TrainingData& data, const MetaTask& task) {
  nn::Batch<double> b = support_batch(data, task);
  add_source(b, data, task.query_source);
  add_target(b, data, task.query_target);
  return b;
}

// ---------------------------------------------------------------------------
// Steps

TrainState TrainState::initial(const NetworkConfig& network, std::uint64_t seed) {
  TrainState s;
  s.network = network;
  s.params = nn::init_params<double>(network, seed);
  s.opt_e = nn::AdamState<double>::zeros(network.extractor_size());
  s.opt_omega = nn::AdamState<double>::zeros(network.head_size());
  s.opt_d = nn::AdamState<double>::zeros(network.head_size());
  return s;
}

Vector update_domain_classifier(TrainState& state, std::span<const MetaTask> tasks,
                                const TaskContext& ctx) {
  const auto& hp = hp_of(ctx);
  if (tasks.empty()) throw Error(ErrorKind::EmptyInput, "update_domain_classifier: no tasks");
  Vector g = Vector::Zero(state.network.head_size());
  for (const auto& task : tasks) {
    if (task.support_target.empty()) continue;
    const auto batch = support_batch(*ctx.data, task);
    g += nn::grad(state.network, Loss::Adversarial, batch, state.params, Group::DomainHead);
  }
  if (hp.optimizer == Optimizer::Adam) state.params.theta_d += hp.lambda_d * state.opt_d.direction(g);
  else state.params.theta_d += hp.lambda_d * g;
  return g;
}

Vector update_anomaly_classifier(TrainState& state, std::span<const MetaTask> tasks,
                                 const TaskContext& ctx) {
  const auto& hp = hp_of(ctx);
  if (tasks.empty()) throw Error(ErrorKind::EmptyInput, "update_anomaly_classifier: no tasks");
  Vector g = Vector::Zero(state.network.head_size());
  for (const auto& task : tasks) {
    const auto batch = support_batch(*ctx.data, task, /*with_target=*/false);
    g += nn::grad(state.network, Loss::Classification, batch, state.params, Group::AnomalyHead);
  }
  if (hp.optimizer == Optimizer::Adam) state.params.theta_omega -= hp.kappa * state.opt_omega.direction(g);
  else state.params.theta_omega -= hp.kappa * g;
  return g;
}

Vector inner_adapt(const NetworkConfig& network, const Params& params, const MetaTask& task,
                   const TaskContext& ctx, double* support_loss) {
  const auto& hp = hp_of(ctx);
  if (task.support_source.empty()) throw Error(ErrorKind::EmptyInput, "inner_adapt: empty support");
  const auto batch = support_batch(*ctx.data, task);
  Params local = params;
  for (std::size_t step = 0; step < hp.inner_steps; ++step) {
    const auto ev = nn::evaluate(network, local, batch, Loss::Task,
                                 GroupMask::only(Group::Extractor), hp.weights());
    if (step == 0 && support_loss) *support_loss = ev.losses.l_task;
    local.theta_e -= hp.delta * ev.grads.theta_e;
  }
  if (hp.inner_steps == 0 && support_loss)
    *support_loss = nn::loss_value(network, Loss::Task, batch, local, hp.weights());
  return local.theta_e;
}

Vector hessian_vector_product(const NetworkConfig& network, const Params& params,
                              const nn::Batch<double>& batch, const Vector& v,
                              nn::TaskWeights weights) {
  const double vnorm = v.norm();
  if (vnorm == 0.0) return Vector::Zero(v.size());
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon()) *
                     (1.0 + params.theta_e.norm()) / vnorm;
  const Params plus = with_extractor(params, params.theta_e + eps * v);
  const Params minus = with_extractor(params, params.theta_e - eps * v);
  const Vector gp = nn::grad(network, Loss::Task, batch, plus, Group::Extractor, weights);
  const Vector gm = nn::grad(network, Loss::Task, batch, minus, Group::Extractor, weights);
  return (gp - gm) / (2.0 * eps);
}

MetaUpdateResult meta_update(TrainState& state, std::span<const MetaTask> tasks,
                             std::span<const Vector> adapted, const TaskContext& ctx) {
  const auto& hp = hp_of(ctx);
  if (adapted.size() != tasks.size())
    throw Error(ErrorKind::Input, "meta_update: one adapted extractor per task required");
  MetaUpdateResult out;
  out.gradient = Vector::Zero(state.network.extractor_size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const bool joint = hp.inner_steps == 0;
    const auto batch = joint ? pooled_batch(*ctx.data, tasks[i]) : query_batch(*ctx.data, tasks[i]);
    const Params at = with_extractor(state.params, joint ? state.params.theta_e : adapted[i]);
    const auto ev = nn::evaluate(state.network, at, batch, Loss::Task,
                                 GroupMask::only(Group::Extractor), hp.weights());
    out.query_loss += ev.losses.l_task / static_cast<double>(tasks.size());
    Vector g = ev.grads.theta_e;
    if (!hp.first_order && !joint) {
      // Re-run the inner trajectory and pull g back through each step:
      // d theta_{k+1} / d theta_k = I - delta * H(theta_k).
      const auto support = support_batch(*ctx.data, tasks[i]);
      std::vector<Vector> trajectory{state.params.theta_e};
      for (std::size_t k = 0; k + 1 < hp.inner_steps; ++k) {
        const auto p = with_extractor(state.params, trajectory.back());
        trajectory.push_back(trajectory.back() -
                             hp.delta * nn::grad(state.network, Loss::Task, support, p,
                                                 Group::Extractor, hp.weights()));
      }
      for (auto it = trajectory.rbegin(); it != trajectory.rend(); ++it) {
        g -= hp.delta * hessian_vector_product(state.network, with_extractor(state.params, *it),
                                               support, g, hp.weights());
      }
    }
    out.gradient += g;
  }
  if (!out.gradient.allFinite()) throw NumericError("theta_e", "non-finite meta-gradient");
  if (hp.optimizer == Optimizer::Adam)
    state.params.theta_e -= hp.alpha * hp.learning_rate * state.opt_e.direction(out.gradient);
  else
    state.params.theta_e -= hp.alpha * out.gradient;
  return out;
}

// ---------------------------------------------------------------------------
// Outer loop

namespace {

std::string curve_line(const HistoryEntry& h) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu\t%.9g\t%.9g\t%.9g\t%.9g\n", h.iteration, h.l_c, h.l_ad,
                h.l_task_mean, h.query_loss);
  return buf;
}

}  // namespace

TrainState train(TrainState state, const TrainingData& data, const Hyperparams& hp,
                 const TrainOptions& options) {
  hp.validate();
  if (data.source.size() != data.source.labels.size())
    throw Error(ErrorKind::Input, "source corpus labels do not match sequences");
  if (data.source.size() == 0) throw Error(ErrorKind::EmptyInput, "source corpus is empty");
  if (data.target.size() == 0 && hp.beta != 0.0)
    throw Error(ErrorKind::Config, "an empty target corpus requires beta = 0");
  if (state.iteration >= hp.max_iterations) return state;

  // Held-out source sessions for early stopping; never part of a task.
  std::vector<std::size_t> source_ids(data.source.size());
  for (std::size_t i = 0; i < source_ids.size(); ++i) source_ids[i] = i;
  Rng split_rng(hp.seed);
  shuffle<std::size_t>(source_ids, split_rng);
  std::size_t n_holdout = 0;
  if (hp.patience > 0 && hp.holdout_fraction > 0.0)
    n_holdout = std::max<std::size_t>(1, static_cast<std::size_t>(hp.holdout_fraction *
                                                                  static_cast<double>(source_ids.size())));
  std::vector<std::size_t> holdout(source_ids.begin(),
                                   source_ids.begin() + static_cast<std::ptrdiff_t>(n_holdout));
  std::vector<std::size_t> task_source(source_ids.begin() + static_cast<std::ptrdiff_t>(n_holdout),
                                       source_ids.end());
  std::sort(task_source.begin(), task_source.end());
  std::vector<std::size_t> task_target(data.target.size());
  for (std::size_t i = 0; i < task_target.size(); ++i) task_target[i] = i;

  TaskSampler sampler(std::move(task_source), std::move(task_target), hp.batch_size,
                      hp.support_ratio, hp.seed + 1);
  // Replay the sampler up to the resumed iteration.
  for (std::size_t i = 0; i < state.iteration; ++i) sampler.sample(hp.meta_batch);

  nn::Batch<double> holdout_batch;
  holdout_batch.inputs = &data.inputs;
  add_source(holdout_batch, data, holdout);

  const TaskContext ctx{&data, &hp};
  double best_holdout = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  while (state.iteration < hp.max_iterations) {
    const auto tasks = sampler.sample(hp.meta_batch);
    const TrainState snapshot = state;
    HistoryEntry entry;
    entry.iteration = state.iteration + 1;
    try {
      for (const auto& task : tasks) {
        const auto ev = nn::evaluate(state.network, state.params, support_batch(data, task),
                                     Loss::Task, GroupMask{}, hp.weights());
        entry.l_c += ev.losses.l_c / static_cast<double>(tasks.size());
        entry.l_ad += ev.losses.l_ad / static_cast<double>(tasks.size());
      }
      update_domain_classifier(state, tasks, ctx);
      update_anomaly_classifier(state, tasks, ctx);
      std::vector<Vector> adapted;
      adapted.reserve(tasks.size());
      for (const auto& task : tasks) {
        double support_loss = 0;
        adapted.push_back(inner_adapt(state.network, state.params, task, ctx, &support_loss));
        entry.l_task_mean += support_loss / static_cast<double>(tasks.size());
      }
      entry.query_loss = meta_update(state, tasks, adapted, ctx).query_loss;
      if (!state.params.all_finite()) throw NumericError("params", "non-finite parameters");
      state.consecutive_skips = 0;
    } catch (const NumericError& e) {
      const std::size_t skips = snapshot.consecutive_skips + 1;
      state = snapshot;
      state.consecutive_skips = skips;
      ++state.iteration;
      if (options.on_warning)
        options.on_warning("iteration " + std::to_string(state.iteration) + " skipped: " + e.what());
      if (skips >= 3)
        throw NumericError(e.where(), "aborting at iteration " + std::to_string(state.iteration) +
                                          " after 3 consecutive numeric errors: " + e.what());
      continue;
    }

    ++state.iteration;
    if (!holdout.empty()) {
      entry.holdout_loss = nn::loss_value(state.network, Loss::Classification, holdout_batch,
                                          state.params, hp.weights());
    }
    state.history.push_back(entry);
    if (options.curve) *options.curve << curve_line(entry);
    if (options.on_iteration) options.on_iteration(state);

    if (!holdout.empty()) {
      if (entry.holdout_loss < best_holdout) {
        best_holdout = entry.holdout_loss;
        since_best = 0;
      } else if (++since_best >= hp.patience) {
        break;
      }
    }
  }
  return state;
}

}  // namespace zerolog::train
