#include "zerolog/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "zerolog/digest.hpp"
#include "zerolog/error.hpp"
#include "zerolog/run_config.hpp"

namespace zerolog::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "zerolog-out";
  std::optional<double> threshold;
};

class Run {
 public:
  Run(std::string command, const Flags& flags, std::ostream& out, std::ostream& err)
      : command_(std::move(command)), config_path_(flags.config), dir_(flags.out), out_(out), err_(err) {
    cfg_ = config::load_run_config(config_path_);
    if (flags.seed) {
      if (command_ == "synth") {
        if (cfg_.data.synthetic) cfg_.data.synthetic->seed = *flags.seed;
      } else {
        cfg_.experiment.hp.seed = *flags.seed;
      }
    }
    if (flags.threshold) {
      if (!(*flags.threshold >= 0.0 && *flags.threshold <= 1.0))
        throw Error(ErrorKind::Config, "--threshold must be in [0, 1]");
      cfg_.experiment.threshold = *flags.threshold;
    }
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::Input, "cannot create output directory " + dir_.string());
  }

  const config::RunConfig& cfg() const { return cfg_; }
  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

  void input(const fs::path& p) {
    if (!fs::is_regular_file(p)) throw Error(ErrorKind::Input, "missing input file " + p.string());
    inputs_.push_back(p);
  }

  void write(const std::string& name, const std::string& bytes) {
    const fs::path p = dir_ / name;
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << bytes;
    if (!f) throw Error(ErrorKind::Input, "cannot write " + p.string());
    outputs_.emplace_back(name, sha256_hex(bytes));
  }

  template <typename F>
  void write_with(const std::string& name, F&& fill) {
    std::ostringstream s;
    fill(s);
    write(name, s.str());
  }

  // The timestamp lives here and nowhere else.
  void write_manifest() {
    json in = json::array();
    in.push_back({{"path", config_path_.generic_string()}, {"sha256", file_sha256_hex(config_path_)}});
    for (const auto& p : inputs_) in.push_back({{"path", p.generic_string()}, {"sha256", file_sha256_hex(p)}});
    json produced = json::array();
    for (const auto& [name, digest] : outputs_) produced.push_back({{"path", name}, {"sha256", digest}});

    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);

    const json m = {{"command", command_},
                    {"created", stamp},
                    {"config", config::to_json(cfg_)},
                    {"inputs", in},
                    {"outputs", produced}};
    std::ofstream f(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
    f << m.dump(2) << '\n';
  }

 private:
  std::string command_;
  fs::path config_path_;
  fs::path dir_;
  std::ostream& out_;
  std::ostream& err_;
  config::RunConfig cfg_;
  std::vector<fs::path> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
};

std::vector<parser::RawLogLine> read_logs(Run& run, const std::vector<fs::path>& logs, const std::string& system) {
  std::vector<parser::RawLogLine> lines;
  for (const auto& p : logs) {
    run.input(p);
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorKind::Input, "cannot open " + p.string());
    auto part = parser::read_raw_lines(in, system);
    lines.insert(lines.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (lines.empty()) throw Error(ErrorKind::EmptyInput, "no log lines in the configured files");
  return lines;
}

data::LabeledSessions load_corpus(Run& run, const config::CorpusConfig& c) {
  const auto profile = c.parser.apply(c.format, c.system_id);
  const auto lines = read_logs(run, c.logs, c.system_id);
  if (c.format == "bgl") return data::load_bgl(lines, profile);

  run.input(c.labels);
  std::ifstream in(c.labels, std::ios::binary);
  if (c.format == "openstack") {
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty()) ids.push_back(line);
    }
    return data::load_openstack(lines, ids, profile);
  }
  // hdfs and synthetic: keyed sessions joined against a label table
  return data::load_hdfs(lines, data::read_label_table(in), profile);
}

data::PreparedPair load_pair(Run& run) {
  const auto& cfg = run.cfg();
  if (cfg.data.synthetic) {
    const auto pair = data::generate_synthetic_pair(*cfg.data.synthetic);
    return data::prepare_pair(data::parse_synthetic(pair.source), data::parse_synthetic(pair.target),
                              pair.word_vectors, cfg.embedding);
  }
  if (!cfg.data.source) throw Error(ErrorKind::Config, "this command needs a data section");
  auto source = load_corpus(run, *cfg.data.source);
  auto target = load_corpus(run, *cfg.data.target);
  run.input(cfg.data.word_vectors);
  const auto table = embed::load_word_vectors(cfg.data.word_vectors, cfg.embedding.dimension);
  if (table.skipped_rows() > 0)
    run.err() << "word vectors: skipped " << table.skipped_rows() << " malformed rows\n";
  return data::prepare_pair(std::move(source), std::move(target), table, cfg.embedding);
}

void print_corpus(Run& run, const char* role, const data::LabeledSessions& c) {
  run.out() << role << '\t' << c.system_id << "\tlines " << c.lines << "\ttemplates " << c.store.size()
            << "\tsessions " << c.sessions.size() << "\tanomalous " << c.anomalous() << "\tdropped "
            << c.dropped << '\n';
}

eval::TrainedModel train_and_save(Run& run, const data::PreparedPair& pair) {
  train::TrainOptions opts;
  opts.on_warning = [&](std::string_view w) { run.err() << "warning: " << w << '\n'; };
  auto model = eval::train_model(pair.data.training, run.cfg().experiment, opts);
  run.write("checkpoint.bin", model.checkpoint.to_bytes());
  run.write("curve.tsv", model.curve);
  run.out() << "iterations\t" << model.iterations << "\ncheckpoint\t" << model.checkpoint.digest() << '\n';
  return model;
}

nn::Checkpoint checkpoint_for(Run& run, const data::PreparedPair& pair) {
  if (run.cfg().checkpoint.empty()) return train_and_save(run, pair).checkpoint;
  run.input(run.cfg().checkpoint);
  auto ckpt = nn::Checkpoint::load(run.cfg().checkpoint);
  if (static_cast<std::size_t>(ckpt.network.input_dim) != pair.embeddings.dimension())
    throw Error(ErrorKind::Input, "checkpoint input_dim does not match the embedding dimension");
  return ckpt;
}

eval::Detection detect_target(Run& run, const data::PreparedPair& pair, const nn::Checkpoint& ckpt) {
  auto det = eval::detect(pair.target.sessions, pair.target.system_id, pair.embeddings, ckpt,
                          run.cfg().experiment.threshold, run.cfg().embedding);
  run.write_with("predictions.tsv", [&](std::ostream& s) {
    s << "session\tprobability\tlabel\n";
    char buf[64];
    for (std::size_t i = 0; i < det.labels.size(); ++i) {
      std::snprintf(buf, sizeof buf, "\t%.9f\t%d\n", det.probabilities[i], det.labels[i]);
      s << pair.target.sessions[i].session_key << buf;
    }
  });
  if (det.unresolved > 0) run.err() << "detect: " << det.unresolved << " events used the OOV fallback\n";
  return det;
}

void print_report(Run& run, const std::string& name, const eval::MetricsReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "\tprecision %.6f\trecall %.6f\tf1 %.6f\n", r.precision, r.recall, r.f1);
  run.out() << name << buf;
}

// ---------------------------------------------------------------------------

void cmd_parse(Run& run) {
  const auto& p = run.cfg().parse;
  if (p.logs.empty()) throw Error(ErrorKind::Input, "parse.logs is empty");
  const std::string system = p.system_id.empty() ? p.format : p.system_id;
  const auto profile = p.parser.apply(p.format, system);
  const auto lines = read_logs(run, p.logs, system);
  const auto parsed = parser::parse_corpus(lines, profile.drain, profile.sessions);
  run.write_with("templates.tsv", [&](std::ostream& s) { parser::write_templates(s, parsed.store); });
  run.write_with("sessions.tsv", [&](std::ostream& s) { parser::write_sessions(s, parsed.grouped.sessions); });
  run.out() << "lines\t" << lines.size() << "\ntemplates\t" << parsed.store.size() << "\nsessions\t"
            << parsed.grouped.sessions.size() << "\ndropped\t"
            << parsed.degenerate_lines + parsed.grouped.dropped_lines << '\n';
}

void cmd_synth(Run& run) {
  const auto& spec = run.cfg().data.synthetic;
  if (!spec) throw Error(ErrorKind::Input, "synth needs data.synthetic");
  const auto pair = data::generate_synthetic_pair(*spec);
  json data_section = {{"word_vectors", "word_vectors.txt"}};
  for (const auto* sys : {&pair.source, &pair.target}) {
    const std::string role = sys == &pair.source ? "source" : "target";
    run.write_with(role + ".log", [&](std::ostream& s) {
      for (const auto& l : sys->lines) s << l << '\n';
    });
    run.write_with(role + "_labels.csv", [&](std::ostream& s) {
      s << "BlockId,Label\n";
      for (const auto& k : sys->session_keys)
        s << k << ',' << (sys->labels.at(k) == parser::Label::Anomalous ? "Anomaly" : "Normal") << '\n';
    });
    data_section[role] = {{"format", "synthetic"},
                          {"system_id", sys->system_id},
                          {"logs", {role + ".log"}},
                          {"labels", role + "_labels.csv"}};
    run.out() << role << '\t' << sys->system_id << "\tlines " << sys->lines.size() << "\tsessions "
              << sys->session_keys.size() << '\n';
  }
  run.write_with("word_vectors.txt", [&](std::ostream& s) { embed::write_word_vectors(s, pair.word_vectors); });
  // A config that reads the files back; target labels there are gold only.
  run.write("data.json", json{{"data", data_section}}.dump(2) + "\n");
}

void cmd_embed(Run& run) {
  const auto pair = load_pair(run);
  print_corpus(run, "source", pair.source);
  print_corpus(run, "target", pair.target);
  run.write_with("embeddings.tsv", [&](std::ostream& s) { embed::write_embeddings(s, pair.embeddings); });
  run.write_with("templates_source.tsv", [&](std::ostream& s) { parser::write_templates(s, pair.source.store); });
  run.write_with("templates_target.tsv", [&](std::ostream& s) { parser::write_templates(s, pair.target.store); });
  run.out() << "embeddings\t" << pair.embeddings.size() << "\nall_oov\t" << pair.embeddings.flagged() << '\n';
}

void cmd_train(Run& run) {
  const auto pair = load_pair(run);
  print_corpus(run, "source", pair.source);
  print_corpus(run, "target", pair.target);
  train_and_save(run, pair);
}

void cmd_detect(Run& run) {
  if (run.cfg().checkpoint.empty()) throw Error(ErrorKind::Input, "detect needs a checkpoint path");
  const auto pair = load_pair(run);
  const auto ckpt = checkpoint_for(run, pair);
  const auto det = detect_target(run, pair, ckpt);
  std::size_t flagged = 0;
  for (int y : det.labels) flagged += y == 1;
  run.out() << "sessions\t" << det.labels.size() << "\nanomalous\t" << flagged << '\n';
}

void cmd_eval(Run& run) {
  const auto pair = load_pair(run);
  const auto ckpt = checkpoint_for(run, pair);
  const auto det = detect_target(run, pair, ckpt);
  auto report = eval::compute_metrics(det.labels, pair.data.target_gold.reveal());
  report.threshold = run.cfg().experiment.threshold;
  report.checkpoint_id = ckpt.digest();
  run.write_with("report.tsv", [&](std::ostream& s) { eval::write_report(s, report); });
  print_report(run, "target", report);
}

void cmd_ablate(Run& run) {
  const auto pair = load_pair(run);
  const auto ab = eval::run_ablation(pair.data, run.cfg().experiment);
  run.write("checkpoint_full.bin", ab.full.checkpoint.to_bytes());
  run.write("checkpoint_without_meta.bin", ab.without_meta.checkpoint.to_bytes());
  run.write_with("report_full.tsv", [&](std::ostream& s) { eval::write_report(s, ab.full.report); });
  run.write_with("report_without_meta.tsv",
                 [&](std::ostream& s) { eval::write_report(s, ab.without_meta.report); });
  print_report(run, "full", ab.full.report);
  print_report(run, "without_meta", ab.without_meta.report);
}

void cmd_sweep(Run& run) {
  const auto pair = load_pair(run);
  const auto& sw = run.cfg().sweep;
  const auto result = eval::run_sweep(pair.data, run.cfg().experiment, sw.axis, sw.values);
  run.write_with("sweep.tsv", [&](std::ostream& s) { eval::write_sweep(s, result); });
  eval::write_sweep(run.out(), result);
}

std::string key_table() {
  std::string s = "Config keys (JSON; * = default taken from the published setup):\n";
  for (const auto& k : config::documented_keys()) {
    std::string line = "  " + k.key;
    if (line.size() < 44) line.resize(44, ' ');
    s += line + " " + k.default_value + (k.from_paper ? "  *" : "") + "\n";
  }
  s += "\n--seed sets experiment.train.seed (data.synthetic.seed for synth).\n"
       "Exit codes: 0 ok, 2 input or config error, 3 numeric failure.\n";
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-system log anomaly detection", "zerolog"};
  app.require_subcommand(1, 1);
  app.footer(key_table());

  struct Command {
    const char* name;
    const char* help;
    void (*body)(Run&);
  };
  const Command commands[] = {
      {"parse", "mine templates and sessions from raw logs", cmd_parse},
      {"embed", "embed the templates of a source/target pair", cmd_embed},
      {"synth", "write a synthetic source/target pair", cmd_synth},
      {"train", "train on a source/target pair and write a checkpoint", cmd_train},
      {"detect", "score target sessions with a checkpoint", cmd_detect},
      {"eval", "detect and score against the target gold labels", cmd_eval},
      {"ablate", "full training vs. the variant without inner adaptation", cmd_ablate},
      {"sweep", "one run per value along a hyperparameter axis", cmd_sweep},
  };

  Flags flags;
  const Command* chosen = nullptr;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", flags.config, "JSON run configuration")->required();
    sub->add_option("--seed", flags.seed, "training seed override");
    sub->add_option("--out", flags.out, "output directory")->capture_default_str();
    sub->add_option("--threshold", flags.threshold, "decision threshold override");
    sub->footer(key_table());
    sub->callback([&chosen, &c] { chosen = &c; });
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? Ok : InputError;
  }

  try {
    Run r(chosen->name, flags, out, err);
    chosen->body(r);
    r.write_manifest();
    return Ok;
  } catch (const NumericError& e) {
    err << "numeric error (" << e.where() << "): " << e.what() << '\n';
    return NumericFailure;
  } catch (const Error& e) {
    err << to_string(e.kind()) << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::Numeric ? NumericFailure : InputError;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return InputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace zerolog::cli
