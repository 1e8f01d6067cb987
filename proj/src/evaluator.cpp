#include "zerolog/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "zerolog/error.hpp"
#include "zerolog/rng.hpp"

namespace zerolog::eval {

MetricsReport compute_metrics(std::span<const int> predicted, std::span<const int> gold) {
  if (predicted.size() != gold.size())
    throw Error(ErrorKind::Input, "predicted and gold label counts differ (" +
                                      std::to_string(predicted.size()) + " vs " +
                                      std::to_string(gold.size()) + ")");
  MetricsReport r;
  auto& c = r.counts;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] != 0 && gold[i] != 1)
      throw Error(ErrorKind::Input, "gold label " + std::to_string(gold[i]) + " at session " +
                                        std::to_string(i) + " is neither 0 nor 1");
    const bool p = predicted[i] != 0;
    if (gold[i]) {
      ++(p ? c.tp : c.fn);
    } else {
      ++(p ? c.fp : c.tn);
    }
  }
  const auto tp = static_cast<double>(c.tp);
  r.precision = c.tp + c.fp == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fp);
  r.recall = c.tp + c.fn == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fn);
  const double sum = r.precision + r.recall;
  r.f1 = sum == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / sum;
  return r;
}

void write_report(std::ostream& out, const MetricsReport& r) {
  char buf[64];
  const auto fixed = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return std::string(buf);
  };
  out << "checkpoint\t" << (r.checkpoint_id.empty() ? "-" : r.checkpoint_id) << '\n'
      << "threshold\t" << fixed(r.threshold) << '\n'
      << "sessions\t" << r.counts.total() << '\n'
      << "tp\t" << r.counts.tp << '\n'
      << "fp\t" << r.counts.fp << '\n'
      << "fn\t" << r.counts.fn << '\n'
      << "tn\t" << r.counts.tn << '\n'
      << "precision\t" << fixed(r.precision) << '\n'
      << "recall\t" << fixed(r.recall) << '\n'
      << "f1\t" << fixed(r.f1) << '\n';
}

MetricsReport read_report(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorKind::Format, "report line without a tab: '" + line + "'");
    kv[line.substr(0, tab)] = line.substr(tab + 1);
  }
  const auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorKind::Format, std::string("report has no '") + key + "' field");
    return it->second;
  };
  const auto number = [&](const char* key) {
    const auto& s = get(key);
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) throw Error(ErrorKind::Format, std::string("report field '") + key + "' is not a number");
    return x;
  };
  const auto count = [&](const char* key) {
    const double x = number(key);
    if (x < 0 || x != std::floor(x)) throw Error(ErrorKind::Format, std::string("bad count '") + key + "'");
    return static_cast<std::uint64_t>(x);
  };
  MetricsReport r;
  r.checkpoint_id = get("checkpoint") == "-" ? "" : get("checkpoint");
  r.threshold = number("threshold");
  r.counts = {count("tp"), count("fp"), count("fn"), count("tn")};
  if (count("sessions") != r.counts.total())
    throw Error(ErrorKind::Format, "report session count does not match tp + fp + fn + tn");
  r.precision = number("precision");
  r.recall = number("recall");
  r.f1 = number("f1");
  return r;
}

Detection detect(const nn::NetworkConfig& network, const nn::NetworkParams<double>& params,
                 const Eigen::MatrixXd& inputs, std::span<const Sequence> sequences, double threshold) {
  std::vector<std::span<const int>> views(sequences.begin(), sequences.end());
  Detection d;
  d.probabilities = nn::anomaly_probabilities(network, params, inputs, views);
  d.labels.reserve(d.probabilities.size());
  for (double p : d.probabilities) d.labels.push_back(p >= threshold ? 1 : 0);
  return d;
}

Detection detect(std::span<const parser::Session> sessions, std::string_view system,
                 const embed::GlobalEmbeddings& embeddings, const nn::Checkpoint& checkpoint,
                 double threshold, const embed::EmbeddingConfig& oov) {
  data::SequenceResolver resolver(embeddings, oov);
  std::vector<Sequence> sequences;
  sequences.reserve(sessions.size());
  for (const auto& s : sessions) sequences.push_back(resolver.resolve(s, system));
  auto d = detect(checkpoint.network, checkpoint.params_double(), resolver.matrix(), sequences, threshold);
  d.unresolved = resolver.unresolved();
  return d;
}

// ---------------------------------------------------------------------------
// Experiments

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"network", nn::to_json(c.network)},
          {"train", train::to_json(c.hp)},
          {"threshold", c.threshold},
          {"source_fraction", c.source_fraction},
          {"target_fraction", c.target_fraction},
          {"use_target", c.use_target},
          {"split_seed", c.split_seed}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "experiment config must be an object");
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "network") c.network = nn::network_config_from_json(value);
      else if (key == "train") c.hp = train::hyperparams_from_json(value);
      else if (key == "threshold") c.threshold = value.get<double>();
      else if (key == "source_fraction") c.source_fraction = value.get<double>();
      else if (key == "target_fraction") c.target_fraction = value.get<double>();
      else if (key == "use_target") c.use_target = value.get<bool>();
      else if (key == "split_seed") c.split_seed = value.get<std::uint64_t>();
      else throw Error(ErrorKind::Config, "unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, "key '" + key + "': " + e.what());
    }
  }
  return c;
}

namespace {

void check_fraction(double f, const char* name) {
  if (!(f > 0.0 && f <= 1.0)) throw Error(ErrorKind::Config, std::string(name) + " must be in (0, 1]");
}

TrainingData subsample(const TrainingData& full, const ExperimentConfig& config) {
  check_fraction(config.source_fraction, "source_fraction");
  check_fraction(config.target_fraction, "target_fraction");
  TrainingData out;
  out.inputs = full.inputs;
  if (config.source_fraction == 1.0) {
    out.source = full.source;
  } else {
    std::vector<parser::Session> shells(full.source.size());
    for (std::size_t i = 0; i < shells.size(); ++i)
      shells[i].label = full.source.labels[i] ? parser::Label::Anomalous : parser::Label::Normal;
    const double f[] = {config.source_fraction};
    for (std::size_t i : data::split_corpus(shells, f, config.split_seed)[0]) {
      out.source.sequences.push_back(full.source.sequences[i]);
      out.source.labels.push_back(full.source.labels[i]);
    }
  }
  if (!config.use_target) {
    // source-only
  } else if (config.target_fraction == 1.0) {
    out.target = full.target;
  } else if (full.target.size() > 0) {
    std::vector<std::size_t> ids(full.target.size());
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(config.split_seed + 1);
    shuffle(std::span<std::size_t>(ids), rng);
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.target_fraction * static_cast<double>(ids.size()))));
    ids.resize(keep);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i : ids) out.target.sequences.push_back(full.target.sequences[i]);
  }
  return out;
}

}  // namespace

TrainedModel train_model(const TrainingData& data, const ExperimentConfig& config,
                         const train::TrainOptions& options) {
  const TrainingData training = subsample(data, config);
  std::ostringstream curve;
  train::TrainOptions opts = options;
  if (!opts.curve) opts.curve = &curve;
  auto state = train::train(train::TrainState::initial(config.network, config.hp.seed), training,
                            config.hp, opts);

  TrainedModel m;
  m.iterations = state.iteration;
  m.curve = curve.str();
  m.checkpoint.network = config.network;
  m.checkpoint.seed = config.hp.seed;
  m.checkpoint.iteration = state.iteration;
  m.checkpoint.hyperparameters = to_json(config);
  m.checkpoint.params = state.params.cast<float>();
  if (!m.checkpoint.params.all_finite())
    throw NumericError("checkpoint", "trained parameters do not fit in float32");
  return m;
}

RunResult run_experiment(const data::CrossSystemData& data, const ExperimentConfig& config,
                         const train::TrainOptions& options) {
  auto model = train_model(data.training, config, options);
  RunResult r;
  r.iterations = model.iterations;
  r.curve = std::move(model.curve);
  r.checkpoint = std::move(model.checkpoint);

  // Evaluation reads the parameters exactly as stored in the checkpoint.
  const auto det = detect(config.network, r.checkpoint.params_double(), data.training.inputs,
                          data.training.target.sequences, config.threshold);
  r.probabilities = det.probabilities;
  r.report = compute_metrics(det.labels, data.target_gold.reveal());
  r.report.threshold = config.threshold;
  r.report.checkpoint_id = r.checkpoint.digest();
  return r;
}

AblationResult run_ablation(const data::CrossSystemData& data, const ExperimentConfig& config) {
  AblationResult out;
  out.full = run_experiment(data, config);
  ExperimentConfig ablated = config;
  ablated.hp.inner_steps = 0;
  out.without_meta = run_experiment(data, ablated);
  return out;
}

SweepAxis sweep_axis_from_string(std::string_view name) {
  if (name == "beta") return SweepAxis::Beta;
  if (name == "gamma") return SweepAxis::Gamma;
  if (name == "source_fraction") return SweepAxis::SourceFraction;
  if (name == "target_fraction") return SweepAxis::TargetFraction;
  throw Error(ErrorKind::Config, "unknown sweep axis '" + std::string(name) + "'");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Beta: return "beta";
    case SweepAxis::Gamma: return "gamma";
    case SweepAxis::SourceFraction: return "source_fraction";
    case SweepAxis::TargetFraction: return "target_fraction";
  }
  return "?";
}

SweepResult run_sweep(const data::CrossSystemData& data, const ExperimentConfig& config, SweepAxis axis,
                      std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::Config, "sweep needs at least one value");
  SweepResult out;
  out.axis = axis;
  out.values.assign(values.begin(), values.end());
  for (double v : values) {
    ExperimentConfig c = config;
    switch (axis) {
      case SweepAxis::Beta: c.hp.beta = v; break;
      case SweepAxis::Gamma: c.hp.gamma = v; break;
      case SweepAxis::SourceFraction: c.source_fraction = v; break;
      case SweepAxis::TargetFraction: c.target_fraction = v; break;
    }
    out.reports.push_back(run_experiment(data, c).report);
  }
  return out;
}

void write_sweep(std::ostream& out, const SweepResult& sweep) {
  char buf[128];
  out << to_string(sweep.axis) << "\tprecision\trecall\tf1\n";
  for (std::size_t i = 0; i < sweep.values.size(); ++i) {
    const auto& r = sweep.reports[i];
    std::snprintf(buf, sizeof buf, "%g\t%.6f\t%.6f\t%.6f\n", sweep.values[i], r.precision, r.recall, r.f1);
    out << buf;
  }
}

LatencyStats measure_inference(const nn::NetworkConfig& network, const nn::NetworkParams<double>& params,
                               const Eigen::MatrixXd& inputs, std::span<const Sequence> sequences,
                               std::size_t repetitions) {
  LatencyStats s;
  if (sequences.empty() || repetitions == 0) return s;
  using Clock = std::chrono::steady_clock;
  const auto one = [&](const Sequence& seq) {
    const Eigen::MatrixXd x = inputs(Eigen::all, seq);
    Sequence local(seq.size());
    std::iota(local.begin(), local.end(), 0);
    const std::span<const int> view[] = {local};
    return nn::anomaly_probabilities(network, params, x, view)[0];
  };
  volatile double sink = 0;
  for (const auto& seq : sequences) sink = sink + one(seq);  // warm-up

  std::vector<double> ms;
  ms.reserve(sequences.size() * repetitions);
  for (std::size_t r = 0; r < repetitions; ++r) {
    for (const auto& seq : sequences) {
      const auto t0 = Clock::now();
      sink = sink + one(seq);
      ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
  }
  s.samples = ms.size();
  s.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  std::sort(ms.begin(), ms.end());
  const std::size_t n = ms.size();
  s.median_ms = n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
  s.p99_ms = ms[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

}  // namespace zerolog::eval
