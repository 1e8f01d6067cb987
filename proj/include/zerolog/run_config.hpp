#pragma once

// One JSON file configures a command-line run. Every section is optional and
// falls back to the library defaults; unknown keys are rejected everywhere.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zerolog/datasets.hpp"
#include "zerolog/embedder.hpp"
#include "zerolog/evaluator.hpp"
#include "zerolog/log_parser.hpp"

namespace zerolog::config {

/// Drain / session overrides applied on top of a named log profile.
struct ParserOverrides {
  std::optional<std::size_t> tree_depth;
  std::optional<double> similarity_threshold;
  std::optional<std::size_t> max_children;
  std::optional<parser::SessionSpec> sessions;

  parser::LogProfile apply(std::string_view profile_name, const std::string& system_id) const;
};

/// One system's corpus on disk.
struct CorpusConfig {
  std::string format;     // hdfs | bgl | openstack | synthetic
  std::string system_id;  // defaults to the format name
  std::vector<std::filesystem::path> logs;
  /// hdfs / synthetic: `key,Label` table; openstack: anomalous instance ids;
  /// bgl: unused (labels are inline).
  std::filesystem::path labels;
  ParserOverrides parser;
};

struct DataConfig {
  /// Generated in memory; exclusive with source/target.
  std::optional<data::SyntheticSpec> synthetic;
  std::optional<CorpusConfig> source;
  std::optional<CorpusConfig> target;
  std::filesystem::path word_vectors;  // required with source/target
};

struct ParseConfig {
  std::string format = "plain";
  std::string system_id;
  std::vector<std::filesystem::path> logs;
  ParserOverrides parser;
};

struct SweepConfig {
  eval::SweepAxis axis = eval::SweepAxis::Beta;
  std::vector<double> values;
};

struct RunConfig {
  DataConfig data;
  ParseConfig parse;
  embed::EmbeddingConfig embedding;
  eval::ExperimentConfig experiment;
  std::filesystem::path checkpoint;  // detect / eval
  SweepConfig sweep;
};

/// Relative paths are resolved against `base_dir`. Errors are Error(Config),
/// except unreadable / unparsable files which are Error(Input).
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved configuration, every key present.
nlohmann::json to_json(const RunConfig& c);

nlohmann::json to_json(const data::SyntheticSpec& s);
data::SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const embed::EmbeddingConfig& c);
embed::EmbeddingConfig embedding_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const parser::SessionSpec& s);
parser::SessionSpec session_spec_from_json(const nlohmann::json& j);

struct KeyHelp {
  std::string key;  // dotted path
  std::string default_value;
  bool from_paper = false;
};

/// Every configuration key with its default, in file order.
std::vector<KeyHelp> documented_keys();

}  // namespace zerolog::config
