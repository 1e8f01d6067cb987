// Acceptance suite. One PASS/FAIL line per gating criterion (1-9); criterion
// 10 needs locally supplied corpora and never gates. Tolerances are pinned
// below; the process exits non-zero when any gating criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "oracles/drain_oracle.hpp"
#include "oracles/network_oracle.hpp"
#include "support/tiny_net.hpp"
#include "zerolog/datasets.hpp"
#include "zerolog/evaluator.hpp"
#include "zerolog/meta_trainer.hpp"
#include "zerolog/run_config.hpp"

namespace fs = std::filesystem;
using namespace zerolog;
using namespace testing_support;

namespace {

constexpr double kGradTol = 1e-4;      // relative, central differences at h = 1e-4
constexpr int kGradInstances = 24;     // >= 20
constexpr double kMetricTol = 1e-6;    // printed-fixture precision
constexpr double kHarmonicTol = 1e-12;
constexpr int kPropertyCases = 1000;
constexpr double kTargetF1 = 0.85;
constexpr double kAblationMargin = 0.10;
constexpr double kBudgetSeconds = 300.0;
const char* kReferenceConfig = "../configs/reference.json";
const char* kCorpusDir = "corpora";  // optional real datasets, relative to tests/

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(const char* f, double a) {
  char b[64];
  std::snprintf(b, sizeof b, f, a);
  return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

oracle::Problem problem_of(const NetworkConfig& c, const Fixture& f, double gamma, double beta) {
  oracle::Problem p;
  p.dims = {static_cast<std::size_t>(c.input_dim), static_cast<std::size_t>(c.hidden_dim),
            static_cast<std::size_t>(c.attention_dim), static_cast<std::size_t>(c.head_hidden_dim)};
  for (Eigen::Index j = 0; j < f.inputs.cols(); ++j) p.columns.push_back(to_std(Vec<double>(f.inputs.col(j))));
  p.source = f.src;
  p.labels = f.labels;
  p.target = f.tgt;
  p.gamma = gamma;
  p.beta = beta;
  return p;
}

// ---------------------------------------------------------------------------

Verdict gradient_correctness() {
  Verdict v;
  double worst = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < kGradInstances; ++k) {
    const auto c = tiny(2 + k % 7);  // hidden 2..8
    const auto seed = static_cast<std::uint64_t>(1000 + k);
    const auto p = init_params<double>(c, seed);
    const auto f = make_fixture(c, seed, 1 + k % 3, 1 + (k + 1) % 3, 5);
    const auto b = f.batch();
    struct Case {
      Loss loss;
      double gamma, beta;
    };
    for (const Case cs : {Case{Loss::Classification, 1, 0}, Case{Loss::Adversarial, 0, 1},
                          Case{Loss::Task, 2.5, 2.0}}) {
      const auto pr = problem_of(c, f, cs.gamma, cs.beta);
      for (Group g : {Group::Extractor, Group::AnomalyHead, Group::DomainHead}) {
        const auto analytic = grad(c, cs.loss, b, p, g, TaskWeights{2.5, 2.0});
        const auto numeric = oracle::finite_difference(
            [&](const std::vector<double>& x) {
              auto e = to_std(p.theta_e), o = to_std(p.theta_omega), d = to_std(p.theta_d);
              (g == Group::Extractor ? e : g == Group::AnomalyHead ? o : d) = x;
              return oracle::task_loss(pr, e, o, d);
            },
            to_std(p.group(g)));
        const double err = max_rel_error(analytic, numeric);
        worst = std::max(worst, err);
        if (!(err < kGradTol))
          v.fail("instance " + std::to_string(k) + " " + group_name(g) + fmt(" rel err %.2e", err));
      }
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 60) v.fail(fmt("took %.1fs", secs));
  v.note(std::to_string(kGradInstances) + " nets x 3 losses x 3 groups, worst rel err " + fmt("%.2e", worst) +
         fmt(", %.1fs", secs));
  return v;
}

Verdict algorithm_fidelity() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto net = tiny(5);
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const auto fx = make_fixture(net, seed, 12, 12);
    const auto data = training_data(fx);
    train::Hyperparams hp;
    hp.batch_size = 12;
    hp.meta_batch = 1;
    hp.optimizer = train::Optimizer::Sgd;
    hp.lambda_d = hp.kappa = 1e-3;
    const train::TaskContext ctx{&data, &hp};
    std::vector<std::size_t> ids(12);
    std::iota(ids.begin(), ids.end(), 0);
    train::TaskSampler sampler(ids, ids, hp.batch_size, hp.support_ratio, seed);
    const auto tasks = sampler.sample(1);
    const auto support = train::support_batch(data, tasks[0]);
    auto state = train::TrainState::initial(net, seed);

    const auto p0 = state.params;
    const double ad0 = loss_value(net, Loss::Adversarial, support, p0);
    train::update_domain_classifier(state, tasks, ctx);
    if (state.params.theta_e != p0.theta_e || state.params.theta_omega != p0.theta_omega ||
        state.params.theta_d == p0.theta_d)
      v.fail("domain step touched a group other than theta_d");
    if (loss_value(net, Loss::Adversarial, support, state.params) < ad0) v.fail("L_ad decreased");

    const auto p1 = state.params;
    const double c1 = loss_value(net, Loss::Classification, support, p1);
    train::update_anomaly_classifier(state, tasks, ctx);
    if (state.params.theta_e != p1.theta_e || state.params.theta_d != p1.theta_d ||
        state.params.theta_omega == p1.theta_omega)
      v.fail("classifier step touched a group other than theta_omega");
    if (loss_value(net, Loss::Classification, support, state.params) > c1) v.fail("L_c increased");

    const auto p2 = state.params;
    const train::Vector adapted[] = {train::inner_adapt(net, p2, tasks[0], ctx)};
    if (!(state.params == p2)) v.fail("inner adaptation modified the live parameters");
    train::meta_update(state, tasks, adapted, ctx);
    if (state.params.theta_omega != p2.theta_omega || state.params.theta_d != p2.theta_d ||
        state.params.theta_e == p2.theta_e)
      v.fail("meta step touched a group other than theta_e");
  }
  const double secs = seconds_since(t0);
  if (secs >= 60) v.fail(fmt("took %.1fs", secs));
  v.note("3 seeds, isolation at each step, L_ad up / L_c down on the step batch");
  return v;
}

Verdict metric_formulas() {
  Verdict v;
  struct Fixture {
    int tp, fp, fn, tn;
    double p, r, f1;
  };
  const Fixture fixtures[] = {
      {1, 0, 0, 0, 1.0, 1.0, 1.0},
      {2, 1, 2, 0, 0.666667, 0.5, 0.571429},
      {0, 0, 3, 4, 0.0, 0.0, 0.0},
      {0, 2, 0, 5, 0.0, 0.0, 0.0},
      {3, 1, 1, 5, 0.75, 0.75, 0.75},
  };
  for (const auto& fx : fixtures) {
    std::vector<int> pred, gold;
    const auto add = [&](int n, int p, int g) {
      pred.insert(pred.end(), static_cast<std::size_t>(n), p);
      gold.insert(gold.end(), static_cast<std::size_t>(n), g);
    };
    add(fx.tp, 1, 1);
    add(fx.fp, 1, 0);
    add(fx.fn, 0, 1);
    add(fx.tn, 0, 0);
    const auto r = eval::compute_metrics(pred, gold);
    if (std::abs(r.precision - fx.p) > kMetricTol || std::abs(r.recall - fx.r) > kMetricTol ||
        std::abs(r.f1 - fx.f1) > kMetricTol)
      v.fail("fixture tp=" + std::to_string(fx.tp) + " fp=" + std::to_string(fx.fp) +
             " fn=" + std::to_string(fx.fn));
  }
  Rng rng(20241);
  double worst = 0;
  for (int i = 0; i < kPropertyCases; ++i) {
    const auto n = 1 + uniform_index(rng, 300);
    std::vector<int> pred(n), gold(n);
    const double bias = uniform01(rng), rate = uniform01(rng);
    for (std::size_t k = 0; k < n; ++k) {
      pred[k] = bernoulli(rng, bias);
      gold[k] = bernoulli(rng, rate);
    }
    const auto r = eval::compute_metrics(pred, gold);
    for (double m : {r.precision, r.recall, r.f1})
      if (!(m >= 0 && m <= 1)) v.fail("metric out of [0, 1]");
    if (r.precision + r.recall > 0) {
      const double err = std::abs(r.f1 - 2 * r.precision * r.recall / (r.precision + r.recall));
      worst = std::max(worst, err);
      if (err >= kHarmonicTol) v.fail(fmt("harmonic identity off by %.2e", err));
    } else if (r.f1 != 0) {
      v.fail("f1 non-zero with P + R = 0");
    }
  }
  v.note(std::to_string(std::size(fixtures)) + " fixtures, " + std::to_string(kPropertyCases) +
         " random tables, worst harmonic error " + fmt("%.1e", worst));
  return v;
}

Verdict parser_equivalence() {
  Verdict v;
  std::ifstream in("data/drain20.log");
  if (!in) {
    v.fail("data/drain20.log not found (run from tests/)");
    return v;
  }
  const auto lines = parser::read_raw_lines(in, "synthetic");
  std::vector<std::string> text;
  for (const auto& l : lines) text.push_back(l.text);
  const auto prof = parser::profile("synthetic");
  const auto parsed = parser::parse_corpus(lines, prof.drain, prof.sessions);

  std::vector<oracle::Mask> masks;
  for (const auto& r : prof.drain.masking_rules) masks.push_back({r.pattern, r.replacement});
  std::vector<std::vector<std::string>> tokens;
  for (const auto& t : text) tokens.push_back(oracle::preprocess(t, prof.drain.header_pattern, masks));
  const auto ref = oracle::drain(tokens, prof.drain.tree_depth, prof.drain.similarity_threshold);

  std::vector<int> got;
  for (const auto& ev : parsed.events) got.push_back(ev.event.template_id);
  if (oracle::partition(got) != oracle::partition(ref.assignment)) v.fail("template partition differs");

  const auto groups = oracle::group_by_key(text, R"(sess_\d+)");
  const auto& g = parsed.grouped;
  if (g.sessions.size() != groups.size()) {
    v.fail("session count differs");
  } else {
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (g.sessions[i].session_key != groups[i].first) v.fail("session key order differs");
      if (g.members[i] != groups[i].second) v.fail("session membership differs for " + groups[i].first);
    }
  }
  v.note(std::to_string(ref.templates.size()) + " templates, " + std::to_string(groups.size()) +
         " sessions over 20 lines");
  return v;
}

Verdict label_firewall() {
  Verdict v;
  data::SyntheticSpec spec;
  spec.sessions_per_system = 300;
  spec.seed = 77;
  const auto pair = data::generate_synthetic_pair(spec);
  const auto prep = data::prepare_pair(data::parse_synthetic(pair.source), data::parse_synthetic(pair.target),
                                       pair.word_vectors, {});
  eval::ExperimentConfig cfg;
  cfg.network.hidden_dim = 8;
  cfg.network.attention_dim = 4;
  cfg.network.head_hidden_dim = 4;
  cfg.hp.batch_size = 32;
  cfg.hp.max_iterations = 40;
  cfg.hp.patience = 0;

  // Same sessions, every gold label flipped. Only the report may differ.
  data::CrossSystemData honest = prep.data;
  data::CrossSystemData poisoned = prep.data;
  {
    std::vector<int> flipped;
    for (int y : prep.data.target_gold.reveal()) flipped.push_back(1 - y);
    poisoned.target_gold = GoldLabels(std::move(flipped));
  }
  const auto watch = [&](const data::CrossSystemData& d) {
    train::TrainOptions o;
    o.on_iteration = [&v, &d](const train::TrainState& st) {
      if (d.target_gold.reads() != 0) v.fail("gold read before iteration " + std::to_string(st.iteration));
    };
    return o;
  };
  const auto a = eval::run_experiment(honest, cfg, watch(honest));
  const auto b = eval::run_experiment(poisoned, cfg, watch(poisoned));
  if (honest.target_gold.reads() != 1 || poisoned.target_gold.reads() != 1)
    v.fail("gold not read exactly once after training");
  if (a.checkpoint.to_bytes() != b.checkpoint.to_bytes()) v.fail("checkpoint depends on target labels");
  if (a.probabilities != b.probabilities) v.fail("target scores depend on target labels");
  if (a.iterations != cfg.hp.max_iterations) v.fail("training did not complete");
  v.note("40 iterations, gold reads 0 during training, flipped-gold checkpoint identical");
  return v;
}

struct EndToEnd {
  eval::RunResult full, ablation, source_only, rerun;
  double seconds_full_and_ablation = 0;
  bool ok = false;
  std::string error;
};

EndToEnd run_reference() {
  EndToEnd e;
  try {
    const auto rc = config::load_run_config(kReferenceConfig);
    const auto pair = data::generate_synthetic_pair(*rc.data.synthetic);
    const auto prep = data::prepare_pair(data::parse_synthetic(pair.source),
                                         data::parse_synthetic(pair.target), pair.word_vectors, rc.embedding);
    const auto t0 = std::chrono::steady_clock::now();
    auto ab = eval::run_ablation(prep.data, rc.experiment);
    e.seconds_full_and_ablation = seconds_since(t0);
    e.full = std::move(ab.full);
    e.ablation = std::move(ab.without_meta);

    auto src = rc.experiment;
    src.hp.beta = 0;
    src.use_target = false;
    e.source_only = eval::run_experiment(prep.data, src);
    e.rerun = eval::run_experiment(prep.data, rc.experiment);
    e.ok = true;
  } catch (const std::exception& ex) {
    e.error = ex.what();
  }
  return e;
}

std::string report_text(const eval::MetricsReport& r) {
  std::ostringstream s;
  eval::write_report(s, r);
  return s.str();
}

Verdict synthetic_transfer(const EndToEnd& e) {
  Verdict v;
  if (!e.ok) {
    v.fail("reference run failed: " + e.error);
    return v;
  }
  const double f = e.full.report.f1, a = e.ablation.report.f1;
  if (!(f >= kTargetF1)) v.fail(fmt("full F1 %.4f < 0.85", f));
  if (!(f - a >= kAblationMargin)) v.fail(fmt("margin over ablation %.4f < 0.10", f - a));
  if (e.seconds_full_and_ablation > kBudgetSeconds)
    v.fail(fmt("full + ablation took %.0fs", e.seconds_full_and_ablation));
  v.note(fmt("full F1 %.4f", f) + fmt(", ablation F1 %.4f", a) + fmt(", %.0fs", e.seconds_full_and_ablation));
  return v;
}

Verdict source_only_ordering(const EndToEnd& e) {
  Verdict v;
  if (!e.ok) {
    v.fail("reference run failed");
    return v;
  }
  const double s = e.source_only.report.f1, f = e.full.report.f1;
  if (!(s < f)) v.fail("source-only not below full");
  v.note(fmt("source-only F1 %.4f", s) + fmt(" vs full %.4f", f));
  return v;
}

Verdict determinism(const EndToEnd& e) {
  Verdict v;
  if (!e.ok) {
    v.fail("reference run failed");
    return v;
  }
  if (e.full.checkpoint.to_bytes() != e.rerun.checkpoint.to_bytes()) v.fail("checkpoints differ");
  if (report_text(e.full.report) != report_text(e.rerun.report)) v.fail("reports differ");
  if (e.full.curve != e.rerun.curve) v.fail("training curves differ");
  v.note("checkpoint " + e.full.checkpoint.digest().substr(0, 16));
  return v;
}

Verdict checkpoint_round_trip(const EndToEnd& e) {
  Verdict v;
  nn::Checkpoint ckpt;
  Eigen::MatrixXd inputs;
  std::vector<Sequence> batch;
  if (e.ok) {
    ckpt = e.full.checkpoint;
  } else {
    ckpt.network = tiny(6);
    ckpt.params = init_params<double>(ckpt.network, 5).cast<float>();
  }
  const auto fx = make_fixture(tiny(), 99, 64, 0);  // only used for its sequences
  Rng rng(99);
  inputs.resize(ckpt.network.input_dim, 12);
  for (Eigen::Index j = 0; j < inputs.cols(); ++j)
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) inputs(i, j) = uniform(rng, -0.2, 0.2);
  for (const auto& s : fx.src) batch.push_back(s);

  const auto path = fs::temp_directory_path() / "zerolog_acceptance.ckpt";
  ckpt.save(path);
  const auto loaded = nn::Checkpoint::load(path);
  fs::remove(path);
  const auto before = eval::detect(ckpt.network, ckpt.params_double(), inputs, batch, 0.5).probabilities;
  const auto after = eval::detect(loaded.network, loaded.params_double(), inputs, batch, 0.5).probabilities;
  if (before != after) v.fail("probabilities changed after reload");
  if (loaded.to_bytes() != ckpt.to_bytes()) v.fail("bytes changed after reload");
  v.note(std::to_string(batch.size()) + " sequences, bit-identical");
  return v;
}

// Optional: counts from locally supplied corpora. Never gates.
std::string table_counts() {
  const fs::path dir(kCorpusDir);
  std::string out;
  const auto check = [&](const char* name, const data::LabeledSessions& c, std::size_t n, std::size_t a) {
    out += std::string(name) + " " + std::to_string(c.sessions.size()) + "/" + std::to_string(c.anomalous()) +
           (c.sessions.size() == n && c.anomalous() == a ? " ok" : " MISMATCH") + "; ";
  };
  try {
    if (fs::exists(dir / "HDFS.log") && fs::exists(dir / "anomaly_label.csv"))
      check("HDFS", data::load_hdfs(dir / "HDFS.log", dir / "anomaly_label.csv"), 575061, 16838);
    if (fs::exists(dir / "BGL.log")) check("BGL", data::load_bgl(dir / "BGL.log"), 85576, 36303);
    if (fs::exists(dir / "openstack_normal1.log")) {
      std::vector<fs::path> logs;
      for (const char* f : {"openstack_normal1.log", "openstack_normal2.log", "openstack_abnormal.log"})
        if (fs::exists(dir / f)) logs.push_back(dir / f);
      check("OpenStack", data::load_openstack(logs, dir / "anomaly_labels.txt"), 3367, 877);
    }
  } catch (const std::exception& e) {
    out += std::string("error: ") + e.what();
  }
  return out;
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  int failures = 0;
  const auto line = [&](int n, const char* name, const Verdict& v) {
    std::printf("criterion %d %s: %s (%s)\n", n, v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    failures += v.pass ? 0 : 1;
  };

  line(1, "gradient correctness", gradient_correctness());
  line(2, "training step fidelity", algorithm_fidelity());
  line(3, "metric formulas", metric_formulas());
  line(4, "parser oracle equivalence", parser_equivalence());
  line(5, "target label firewall", label_firewall());
  const auto e2e = run_reference();
  line(6, "synthetic transfer", synthetic_transfer(e2e));
  line(7, "source-only below full", source_only_ordering(e2e));
  line(8, "determinism", determinism(e2e));
  line(9, "checkpoint round trip", checkpoint_round_trip(e2e));

  const auto counts = table_counts();
  if (counts.empty())
    std::printf("criterion 10 SKIP: real corpora (no files under tests/%s, non-gating)\n", kCorpusDir);
  else
    std::printf("criterion 10 INFO: real corpora (%s non-gating)\n", counts.c_str());

  std::printf("%d gating criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
