#include "zerolog/run_config.hpp"

#include <fstream>
#include <functional>
#include <set>

#include "zerolog/error.hpp"

namespace zerolog::config {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void unknown(const std::string& where, const std::string& key) {
  throw Error(ErrorKind::Config, "unknown key '" + where + key + "'");
}

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "'" + where + "' must be an object");
}

// Runs `body` and rewrites json type errors as config errors naming the key.
template <typename F>
void guarded(const std::string& key, F&& body) {
  try {
    body();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "key '" + key + "': " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::vector<fs::path> path_list(const json& v, const fs::path& base) {
  std::vector<fs::path> out;
  if (v.is_string()) {
    out.push_back(resolve(base, v.get<std::string>()));
    return out;
  }
  for (const auto& e : v) out.push_back(resolve(base, e.get<std::string>()));
  return out;
}

json paths_json(const std::vector<fs::path>& paths) {
  json a = json::array();
  for (const auto& p : paths) a.push_back(p.generic_string());
  return a;
}

// Keys shared by the parse section and the per-corpus sections.
bool read_override(ParserOverrides& o, const std::string& key, const json& value) {
  if (key == "tree_depth") o.tree_depth = value.get<std::size_t>();
  else if (key == "similarity_threshold") o.similarity_threshold = value.get<double>();
  else if (key == "max_children") o.max_children = value.get<std::size_t>();
  else if (key == "sessions") o.sessions = session_spec_from_json(value);
  else return false;
  return true;
}

void write_overrides(json& j, const ParserOverrides& o) {
  j["tree_depth"] = o.tree_depth ? json(*o.tree_depth) : json(nullptr);
  j["similarity_threshold"] = o.similarity_threshold ? json(*o.similarity_threshold) : json(nullptr);
  j["max_children"] = o.max_children ? json(*o.max_children) : json(nullptr);
  j["sessions"] = o.sessions ? to_json(*o.sessions) : json(nullptr);
}

const std::set<std::string> kFormats = {"hdfs", "bgl", "openstack", "synthetic"};

CorpusConfig corpus_from_json(const json& j, const fs::path& base, const std::string& where) {
  require_object(j, where);
  CorpusConfig c;
  for (const auto& [key, value] : j.items()) {
    if (value.is_null()) continue;
    guarded(where + "." + key, [&] {
      if (key == "format") c.format = value.get<std::string>();
      else if (key == "system_id") c.system_id = value.get<std::string>();
      else if (key == "logs") c.logs = path_list(value, base);
      else if (key == "labels") c.labels = resolve(base, value.get<std::string>());
      else if (!read_override(c.parser, key, value)) unknown(where + ".", key);
    });
  }
  if (!kFormats.count(c.format))
    throw Error(ErrorKind::Config, "'" + where + ".format' must be one of hdfs, bgl, openstack, synthetic");
  if (c.logs.empty()) throw Error(ErrorKind::Config, "'" + where + ".logs' is empty");
  if (c.format != "bgl" && c.labels.empty())
    throw Error(ErrorKind::Config, "'" + where + ".labels' is required for " + c.format);
  if (c.system_id.empty()) c.system_id = c.format;
  return c;
}

json to_json(const CorpusConfig& c) {
  json j = {{"format", c.format},
            {"system_id", c.system_id},
            {"logs", paths_json(c.logs)},
            {"labels", c.labels.generic_string()}};
  write_overrides(j, c.parser);
  return j;
}

}  // namespace

parser::LogProfile ParserOverrides::apply(std::string_view profile_name, const std::string& system_id) const {
  auto p = parser::profile(profile_name);
  if (tree_depth) p.drain.tree_depth = *tree_depth;
  if (similarity_threshold) p.drain.similarity_threshold = *similarity_threshold;
  if (max_children) p.drain.max_children = *max_children;
  if (sessions) p.sessions.strategy = sessions->strategy;
  if (!system_id.empty()) p.sessions.system_id = system_id;
  p.drain.validate();
  p.sessions.validate();
  return p;
}

// ---------------------------------------------------------------------------

json to_json(const parser::SessionSpec& s) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, parser::KeyRegex>)
          return {{"strategy", "key_regex"}, {"pattern", v.pattern}};
        else if constexpr (std::is_same_v<T, parser::FixedCount>)
          return {{"strategy", "fixed_count"}, {"n", v.n}};
        else
          return {{"strategy", "time_window"},
                  {"seconds", v.seconds},
                  {"stride", v.stride},
                  {"timestamp_pattern", v.timestamp_pattern}};
      },
      s.strategy);
}

parser::SessionSpec session_spec_from_json(const json& j) {
  require_object(j, "sessions");
  parser::SessionSpec s;
  const auto strategy = j.value("strategy", std::string());
  const auto allow = [&](std::initializer_list<const char*> keys) {
    for (const auto& [key, value] : j.items()) {
      bool ok = key == "strategy";
      for (const char* k : keys) ok = ok || key == k;
      if (!ok) unknown("sessions.", key);
    }
  };
  guarded("sessions", [&] {
    if (strategy == "key_regex") {
      allow({"pattern"});
      s.strategy = parser::KeyRegex{j.at("pattern").get<std::string>()};
    } else if (strategy == "fixed_count") {
      allow({"n"});
      s.strategy = parser::FixedCount{j.value("n", std::size_t{1})};
    } else if (strategy == "time_window") {
      allow({"seconds", "stride", "timestamp_pattern"});
      parser::TimeWindow w;
      w.seconds = j.value("seconds", w.seconds);
      w.stride = j.value("stride", w.seconds);
      w.timestamp_pattern = j.value("timestamp_pattern", w.timestamp_pattern);
      s.strategy = w;
    } else {
      throw Error(ErrorKind::Config, "sessions.strategy must be key_regex, fixed_count or time_window");
    }
  });
  s.validate();
  return s;
}

json to_json(const data::SyntheticSpec& s) {
  return {{"templates_per_system", s.templates_per_system},
          {"vocabulary_overlap", s.vocabulary_overlap},
          {"anomaly_rate", s.anomaly_rate},
          {"min_session_length", s.min_session_length},
          {"max_session_length", s.max_session_length},
          {"shift_strength", s.shift_strength},
          {"sessions_per_system", s.sessions_per_system},
          {"seed", s.seed}};
}

data::SyntheticSpec synthetic_spec_from_json(const json& j) {
  require_object(j, "data.synthetic");
  data::SyntheticSpec s;
  for (const auto& [key, value] : j.items()) {
    guarded("data.synthetic." + key, [&] {
      if (key == "templates_per_system") s.templates_per_system = value.get<std::size_t>();
      else if (key == "vocabulary_overlap") s.vocabulary_overlap = value.get<double>();
      else if (key == "anomaly_rate") s.anomaly_rate = value.get<double>();
      else if (key == "min_session_length") s.min_session_length = value.get<std::size_t>();
      else if (key == "max_session_length") s.max_session_length = value.get<std::size_t>();
      else if (key == "shift_strength") s.shift_strength = value.get<double>();
      else if (key == "sessions_per_system") s.sessions_per_system = value.get<std::size_t>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else unknown("data.synthetic.", key);
    });
  }
  s.validate();
  return s;
}

json to_json(const embed::EmbeddingConfig& c) {
  return {{"aggregation", c.aggregation == embed::Aggregation::Mean ? "mean" : "tfidf"},
          {"oov_policy", c.oov_policy == embed::OovPolicy::Zero ? "zero" : "seeded_hash"},
          {"dimension", c.dimension},
          {"normalize_tokens", c.normalize_tokens},
          {"oov_seed", c.oov_seed}};
}

embed::EmbeddingConfig embedding_config_from_json(const json& j) {
  require_object(j, "embedding");
  embed::EmbeddingConfig c;
  for (const auto& [key, value] : j.items()) {
    guarded("embedding." + key, [&] {
      if (key == "aggregation") {
        const auto v = value.get<std::string>();
        if (v == "mean") c.aggregation = embed::Aggregation::Mean;
        else if (v == "tfidf") c.aggregation = embed::Aggregation::TfIdfWeighted;
        else throw Error(ErrorKind::Config, "embedding.aggregation must be mean or tfidf");
      } else if (key == "oov_policy") {
        const auto v = value.get<std::string>();
        if (v == "zero") c.oov_policy = embed::OovPolicy::Zero;
        else if (v == "seeded_hash") c.oov_policy = embed::OovPolicy::SeededHash;
        else throw Error(ErrorKind::Config, "embedding.oov_policy must be zero or seeded_hash");
      } else if (key == "dimension") c.dimension = value.get<std::size_t>();
      else if (key == "normalize_tokens") c.normalize_tokens = value.get<bool>();
      else if (key == "oov_seed") c.oov_seed = value.get<std::uint64_t>();
      else unknown("embedding.", key);
    });
  }
  if (c.dimension == 0) throw Error(ErrorKind::Config, "embedding.dimension must be > 0");
  return c;
}

// ---------------------------------------------------------------------------

RunConfig run_config_from_json(const json& j, const fs::path& base) {
  require_object(j, "config");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "data") {
      require_object(value, "data");
      for (const auto& [k, v] : value.items()) {
        if (v.is_null()) continue;
        guarded("data." + k, [&] {
          if (k == "synthetic") c.data.synthetic = synthetic_spec_from_json(v);
          else if (k == "source") c.data.source = corpus_from_json(v, base, "data.source");
          else if (k == "target") c.data.target = corpus_from_json(v, base, "data.target");
          else if (k == "word_vectors") c.data.word_vectors = resolve(base, v.get<std::string>());
          else unknown("data.", k);
        });
      }
    } else if (key == "parse") {
      require_object(value, "parse");
      for (const auto& [k, v] : value.items()) {
        if (v.is_null()) continue;
        guarded("parse." + k, [&] {
          if (k == "format") c.parse.format = v.get<std::string>();
          else if (k == "system_id") c.parse.system_id = v.get<std::string>();
          else if (k == "logs") c.parse.logs = path_list(v, base);
          else if (!read_override(c.parse.parser, k, v)) unknown("parse.", k);
        });
      }
    } else if (key == "embedding") {
      c.embedding = embedding_config_from_json(value);
    } else if (key == "experiment") {
      c.experiment = eval::experiment_config_from_json(value);
    } else if (key == "checkpoint") {
      guarded(key, [&] {
        if (!value.is_null()) c.checkpoint = resolve(base, value.get<std::string>());
      });
    } else if (key == "sweep") {
      require_object(value, "sweep");
      for (const auto& [k, v] : value.items()) {
        guarded("sweep." + k, [&] {
          if (k == "axis") c.sweep.axis = eval::sweep_axis_from_string(v.get<std::string>());
          else if (k == "values") c.sweep.values = v.get<std::vector<double>>();
          else unknown("sweep.", k);
        });
      }
    } else {
      unknown("", key);
    }
  }
  const bool files = c.data.source || c.data.target;
  if (c.data.synthetic && files)
    throw Error(ErrorKind::Config, "data.synthetic and data.source/target are exclusive");
  if (files) {
    if (!c.data.source || !c.data.target)
      throw Error(ErrorKind::Config, "data.source and data.target must be given together");
    if (c.data.source->system_id == c.data.target->system_id)
      throw Error(ErrorKind::Config, "data.source and data.target need distinct system_id values");
    if (c.data.word_vectors.empty())
      throw Error(ErrorKind::Config, "data.word_vectors is required with data.source/target");
  }
  c.experiment.network.validate();
  if (static_cast<std::size_t>(c.experiment.network.input_dim) != c.embedding.dimension)
    throw Error(ErrorKind::Config, "experiment.network.input_dim must equal embedding.dimension");
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Input, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Input, "config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  json data = {{"synthetic", c.data.synthetic ? to_json(*c.data.synthetic) : json(nullptr)},
               {"source", c.data.source ? to_json(*c.data.source) : json(nullptr)},
               {"target", c.data.target ? to_json(*c.data.target) : json(nullptr)},
               {"word_vectors", c.data.word_vectors.generic_string()}};
  json parse = {{"format", c.parse.format}, {"system_id", c.parse.system_id}, {"logs", paths_json(c.parse.logs)}};
  write_overrides(parse, c.parse.parser);
  return {{"data", data},
          {"parse", parse},
          {"embedding", to_json(c.embedding)},
          {"experiment", eval::to_json(c.experiment)},
          {"checkpoint", c.checkpoint.generic_string()},
          {"sweep", {{"axis", std::string(eval::to_string(c.sweep.axis))}, {"values", c.sweep.values}}}};
}

std::vector<KeyHelp> documented_keys() {
  // Defaults that come straight from the published implementation details.
  static const std::set<std::string> paper = {
      "embedding.dimension",        "experiment.network.input_dim", "experiment.train.batch_size",
      "experiment.train.learning_rate", "experiment.train.lambda_d",  "experiment.train.kappa",
      "experiment.train.alpha",     "experiment.train.beta",        "experiment.train.gamma",
      "experiment.train.optimizer"};

  RunConfig c;
  c.data.synthetic = data::SyntheticSpec{};
  json j = to_json(c);
  const json corpus = {{"format", "hdfs|bgl|openstack|synthetic"},
                       {"system_id", "<format>"},
                       {"logs", json::array()},
                       {"labels", ""},
                       {"tree_depth", nullptr},
                       {"similarity_threshold", nullptr},
                       {"max_children", nullptr},
                       {"sessions", nullptr}};
  j["data"]["source"] = corpus;
  j["data"]["target"] = corpus;

  std::vector<KeyHelp> out;
  std::function<void(const json&, const std::string&)> walk = [&](const json& v, const std::string& prefix) {
    if (v.is_object() && !v.empty() && prefix.find(".sessions") == std::string::npos) {
      for (const auto& [k, child] : v.items()) walk(child, prefix.empty() ? k : prefix + "." + k);
      return;
    }
    std::string shown = v.is_null() ? "(profile default)" : v.is_string() ? v.get<std::string>() : v.dump();
    if (shown.empty()) shown = "\"\"";
    out.push_back({prefix, shown, paper.count(prefix) > 0});
  };
  walk(j, "");
  return out;
}

}  // namespace zerolog::config
