#include <doctest.h>

#include <fstream>
#include <unistd.h>
#include <sstream>

#include "oracles/drain_oracle.hpp"
#include "zerolog/checkpoint.hpp"
#include "zerolog/cli.hpp"
#include "zerolog/digest.hpp"
#include "zerolog/evaluator.hpp"
#include "zerolog/run_config.hpp"

namespace fs = std::filesystem;
using namespace zerolog;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name)
      : dir(fs::temp_directory_path() / ("zerolog_cli_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name, std::ios::binary) << text;
    return dir / name;
  }
  std::string out(const std::string& sub) const { return (dir / sub).string(); }
};

const char* kSmall = R"({
  "data": {"synthetic": {"sessions_per_system": 100, "seed": 3}},
  "experiment": {
    "network": {"hidden_dim": 6, "attention_dim": 4, "head_hidden_dim": 4},
    "train": {"batch_size": 16, "max_iterations": 3, "patience": 0}
  }
})";

}  // namespace

TEST_CASE("parse: counts match the Drain oracle and reruns are byte-identical") {
  Scratch s("parse");
  const auto log = fs::absolute("data/drain20.log");
  const auto cfg = s.write("parse.json", R"({"parse": {"format": "synthetic", "logs": [")" +
                                             log.generic_string() + R"("]}})");
  const auto a = call({"parse", "--config", cfg.string(), "--out", s.out("a")});
  REQUIRE(a.code == 0);
  const auto b = call({"parse", "--config", cfg.string(), "--out", s.out("b")});
  CHECK(a.out == b.out);
  CHECK(slurp(s.dir / "a/templates.tsv") == slurp(s.dir / "b/templates.tsv"));
  CHECK(slurp(s.dir / "a/sessions.tsv") == slurp(s.dir / "b/sessions.tsv"));

  const auto prof = parser::profile("synthetic");
  std::vector<oracle::Mask> masks;
  for (const auto& r : prof.drain.masking_rules) masks.push_back({r.pattern, r.replacement});
  std::vector<std::vector<std::string>> tokens;
  std::vector<std::string> text;
  std::ifstream in(log);
  for (std::string line; std::getline(in, line);) {
    tokens.push_back(oracle::preprocess(line, prof.drain.header_pattern, masks));
    text.push_back(line);
  }
  const auto ref = oracle::drain(tokens, prof.drain.tree_depth, prof.drain.similarity_threshold);
  const auto sessions = oracle::group_by_key(text, R"(sess_\d+)");
  CHECK(a.out.find("templates\t" + std::to_string(ref.templates.size()) + "\n") != std::string::npos);
  CHECK(a.out.find("sessions\t" + std::to_string(sessions.size()) + "\n") != std::string::npos);
  CHECK(a.out.find("lines\t20\n") != std::string::npos);

  const auto manifest = nlohmann::json::parse(slurp(s.dir / "a/manifest.json"));
  CHECK(manifest["inputs"].size() == 2);
  CHECK(manifest["inputs"][1]["sha256"] == file_sha256_hex(log));
}

TEST_CASE("parse: an empty log is an input error") {
  Scratch s("empty");
  s.write("empty.log", "");
  const auto cfg = s.write("c.json", R"({"parse": {"logs": ["empty.log"]}})");
  CHECK(call({"parse", "--config", cfg.string(), "--out", s.out("o")}).code == 2);
  const auto missing = s.write("m.json", R"({"parse": {"logs": ["nowhere.log"]}})");
  CHECK(call({"parse", "--config", missing.string(), "--out", s.out("o")}).code == 2);
}

TEST_CASE("config errors exit with 2") {
  Scratch s("config");
  CHECK(call({"train", "--config", (s.dir / "absent.json").string()}).code == 2);
  CHECK(call({"train", "--config", s.write("a.json", "{not json").string()}).code == 2);
  CHECK(call({"train", "--config", s.write("b.json", R"({"experimnt": {}})").string()}).code == 2);
  CHECK(call({"train", "--config", s.write("c.json", R"({"experiment": {"train": {"betta": 1}}})").string()})
            .code == 2);
  CHECK(call({"train", "--config", s.write("d.json", R"({"data": {"synthetic": {"seed": "x"}}})").string()})
            .code == 2);
  CHECK(call({"train"}).code == 2);
  CHECK(call({"frobnicate", "--config", "x"}).code == 2);
}

TEST_CASE("train: zero iterations write the initialization") {
  Scratch s("init");
  auto cfg = nlohmann::json::parse(kSmall);
  cfg["experiment"]["train"]["max_iterations"] = 0;
  const auto path = s.write("c.json", cfg.dump());
  REQUIRE(call({"train", "--config", path.string(), "--out", s.out("o"), "--seed", "9"}).code == 0);
  const auto ckpt = nn::Checkpoint::load(s.dir / "o/checkpoint.bin");
  const auto rc = config::load_run_config(path);
  const auto init = nn::init_params<double>(rc.experiment.network, 9).cast<float>();
  CHECK(ckpt.params.theta_e == init.theta_e);
  CHECK(ckpt.params.theta_omega == init.theta_omega);
  CHECK(ckpt.params.theta_d == init.theta_d);
  CHECK(ckpt.iteration == 0);
}

TEST_CASE("train: same seed twice gives identical outputs, another seed does not") {
  Scratch s("determinism");
  const auto cfg = s.write("c.json", kSmall).string();
  const auto a = call({"train", "--config", cfg, "--out", s.out("a")});
  const auto b = call({"train", "--config", cfg, "--out", s.out("b")});
  const auto c = call({"train", "--config", cfg, "--out", s.out("c"), "--seed", "99"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  for (const char* f : {"checkpoint.bin", "curve.tsv"}) CHECK(slurp(s.dir / "a" / f) == slurp(s.dir / "b" / f));
  CHECK(slurp(s.dir / "a/checkpoint.bin") != slurp(s.dir / "c/checkpoint.bin"));
  // manifests differ at most in the timestamp
  auto ma = nlohmann::json::parse(slurp(s.dir / "a/manifest.json"));
  auto mb = nlohmann::json::parse(slurp(s.dir / "b/manifest.json"));
  ma.erase("created");
  mb.erase("created");
  CHECK(ma == mb);
}

TEST_CASE("synth output read back from files trains to the same checkpoint") {
  Scratch s("synth");
  const auto cfg = s.write("c.json", kSmall).string();
  REQUIRE(call({"synth", "--config", cfg, "--out", s.out("data")}).code == 0);
  auto files = nlohmann::json::parse(slurp(s.dir / "data/data.json"));
  files["experiment"] = nlohmann::json::parse(kSmall)["experiment"];
  const auto from_files = (s.dir / "data/run.json");
  std::ofstream(from_files) << files.dump();
  REQUIRE(call({"train", "--config", from_files.string(), "--out", s.out("f")}).code == 0);
  REQUIRE(call({"train", "--config", cfg, "--out", s.out("m")}).code == 0);
  CHECK(slurp(s.dir / "f/checkpoint.bin") == slurp(s.dir / "m/checkpoint.bin"));
}

TEST_CASE("eval: threshold 0 flags everything, giving precision = anomaly share") {
  Scratch s("eval");
  const auto cfg = s.write("c.json", kSmall).string();
  REQUIRE(call({"train", "--config", cfg, "--out", s.out("t")}).code == 0);
  auto j = nlohmann::json::parse(kSmall);
  j["checkpoint"] = "t/checkpoint.bin";
  const auto ecfg = s.write("e.json", j.dump()).string();
  const auto r = call({"eval", "--config", ecfg, "--out", s.out("e"), "--threshold", "0"});
  REQUIRE(r.code == 0);
  std::ifstream in(s.dir / "e/report.tsv");
  const auto report = eval::read_report(in);
  CHECK(report.counts.fn == 0);
  CHECK(report.counts.tn == 0);
  CHECK(report.counts.total() == 100);
  const double p = static_cast<double>(report.counts.tp) / 100.0;
  CHECK(report.precision == doctest::Approx(p).epsilon(1e-6));
  CHECK(report.recall == 1.0);
  CHECK(report.f1 == doctest::Approx(2 * p / (p + 1)).epsilon(1e-6));
  CHECK(report.checkpoint_id == nn::Checkpoint::load(s.dir / "t/checkpoint.bin").digest());

  CHECK(call({"detect", "--config", cfg, "--out", s.out("d")}).code == 2);  // no checkpoint
  REQUIRE(call({"detect", "--config", ecfg, "--out", s.out("d")}).code == 0);
  CHECK(slurp(s.dir / "d/predictions.tsv").rfind("session\tprobability\tlabel\n", 0) == 0);
}

TEST_CASE("sweep: a single point equals train + eval") {
  Scratch s("sweep");
  auto j = nlohmann::json::parse(kSmall);
  j["sweep"] = {{"axis", "gamma"}, {"values", {2.5}}};
  const auto cfg = s.write("c.json", j.dump()).string();
  REQUIRE(call({"sweep", "--config", cfg, "--out", s.out("s")}).code == 0);
  REQUIRE(call({"eval", "--config", cfg, "--out", s.out("e")}).code == 0);
  std::ifstream in(s.dir / "e/report.tsv");
  const auto report = eval::read_report(in);
  char row[128];
  std::snprintf(row, sizeof row, "2.5\t%.6f\t%.6f\t%.6f\n", report.precision, report.recall, report.f1);
  CHECK(slurp(s.dir / "s/sweep.tsv") == std::string("gamma\tprecision\trecall\tf1\n") + row);
}

TEST_CASE("ablate writes both reports") {
  Scratch s("ablate");
  const auto cfg = s.write("c.json", kSmall).string();
  const auto r = call({"ablate", "--config", cfg, "--out", s.out("a")});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(s.dir / "a/report_full.tsv"));
  CHECK(fs::exists(s.dir / "a/report_without_meta.tsv"));
  CHECK(r.out.find("without_meta\tprecision") != std::string::npos);
}

TEST_CASE("numeric failure exits with 3") {
  Scratch s("numeric");
  // rates this large push the parameters past the float32 range of a checkpoint
  auto j = nlohmann::json::parse(kSmall);
  for (const char* rate : {"learning_rate", "kappa", "lambda_d"}) j["experiment"]["train"][rate] = 1e300;
  std::ofstream(s.dir / "run.json") << j.dump();
  const auto r = call({"train", "--config", (s.dir / "run.json").string(), "--out", s.out("t")});
  CHECK(r.code == 3);
  CHECK(r.err.find("numeric") != std::string::npos);
}

TEST_CASE("help lists every config key and flags published defaults") {
  const auto top = call({"--help"});
  CHECK(top.code == 0);
  const auto sub = call({"train", "--help"});
  CHECK(sub.code == 0);
  for (const auto& k : config::documented_keys()) {
    CHECK_MESSAGE(sub.out.find("  " + k.key + " ") != std::string::npos, k.key);
    if (k.from_paper) CHECK(sub.out.find(k.key) != std::string::npos);
  }
  CHECK(sub.out.find("experiment.train.gamma") != std::string::npos);
  const auto line_of = [&](const std::string& key) {
    const auto at = sub.out.find("  " + key + " ");
    return sub.out.substr(at, sub.out.find('\n', at) - at);
  };
  CHECK(line_of("experiment.train.gamma").find("2.5  *") != std::string::npos);
  CHECK(line_of("experiment.threshold").find('*') == std::string::npos);
}
