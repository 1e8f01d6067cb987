#pragma once

// Loaders for HDFS / BGL / OpenStack in their published text formats, corpus
// splitting, and a deterministic synthetic pair of log-producing systems.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "zerolog/corpus.hpp"
#include "zerolog/embedder.hpp"
#include "zerolog/log_parser.hpp"

namespace zerolog::data {

using parser::Label;
using parser::Session;

enum class Role { Source, Target };

/// A parsed, labeled corpus of one system.
struct LabeledSessions {
  std::string system_id;
  parser::TemplateStore store;
  std::vector<Session> sessions;
  std::uint64_t lines = 0;
  std::uint64_t dropped = 0;  // lines or blocks that could not be joined / grouped

  std::size_t anomalous() const;
  std::size_t normal() const;
};

struct CorpusManifest {
  std::string system_id;
  Role role = Role::Source;
  std::vector<std::filesystem::path> paths;
  std::uint64_t lines = 0;
  std::uint64_t sessions = 0;
  std::uint64_t normal = 0;
  std::uint64_t anomalous = 0;
};

CorpusManifest manifest_of(const LabeledSessions& corpus, Role role,
                           std::vector<std::filesystem::path> paths);

/// `BlockId,Label` with Label in {Normal, Anomaly}; a header row is skipped.
std::map<std::string, Label> read_label_table(std::istream& in);

/// Sessions keyed by block id; labels joined from the label table. Blocks
/// without a label are dropped and counted. Zero joined sessions ->
/// Error(Join).
LabeledSessions load_hdfs(std::span<const parser::RawLogLine> lines,
                          const std::map<std::string, Label>& labels,
                          const parser::LogProfile& profile = parser::profile("hdfs"));
LabeledSessions load_hdfs(const std::filesystem::path& log, const std::filesystem::path& labels);

/// A line is anomalous iff its first field is not `-`; a session is anomalous
/// iff any of its lines is. Lines with fewer than ten fields are skipped.
LabeledSessions load_bgl(std::span<const parser::RawLogLine> lines,
                         const parser::LogProfile& profile = parser::profile("bgl"));
LabeledSessions load_bgl(const std::filesystem::path& log,
                         const parser::LogProfile& profile = parser::profile("bgl"));

/// Sessions keyed by instance id; `anomalous_ids` lists anomalous instances,
/// every other instance is Normal.
LabeledSessions load_openstack(std::span<const parser::RawLogLine> lines,
                               const std::vector<std::string>& anomalous_ids,
                               const parser::LogProfile& profile = parser::profile("openstack"));
LabeledSessions load_openstack(std::span<const std::filesystem::path> logs,
                               const std::filesystem::path& anomalous_ids);

/// Label-stratified uniform sampling without replacement. `fractions` apply
/// to each class separately; returned index lists are disjoint. A fraction
/// giving zero sessions of a class that is present -> Error(Config).
std::vector<std::vector<std::size_t>> split_corpus(std::span<const Session> sessions,
                                                   std::span<const double> fractions,
                                                   std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic systems

struct SyntheticSpec {
  std::size_t templates_per_system = 40;
  double vocabulary_overlap = 0.5;
  double anomaly_rate = 0.3;
  std::size_t min_session_length = 8;
  std::size_t max_session_length = 20;
  double shift_strength = 1.0;
  std::size_t sessions_per_system = 2000;
  std::uint64_t seed = 2024;

  void validate() const;
};

struct SyntheticSystem {
  std::string system_id;
  std::vector<std::string> lines;           // raw log text
  std::vector<std::string> session_keys;    // in first-appearance order
  std::map<std::string, Label> labels;      // session key -> label
};

struct SyntheticPair {
  SyntheticSystem source;
  SyntheticSystem target;  // labels here are the evaluation-only gold
  embed::WordVectorTable word_vectors{300};
};

SyntheticPair generate_synthetic_pair(const SyntheticSpec& spec);

/// Parses raw synthetic lines with the synthetic profile and joins labels.
LabeledSessions parse_synthetic(const SyntheticSystem& system);

// ---------------------------------------------------------------------------
// Assembling trainer input

/// Source and target sessions mapped into one embedding matrix. The target
/// side is split into the unlabeled training view and the sealed gold.
struct CrossSystemData {
  TrainingData training;
  GoldLabels target_gold;
  std::vector<std::string> target_keys;
};

/// Maps session events to embedding columns. Template ids missing from the
/// table get an extra column from the OOV policy applied to the template key
/// (one column per distinct key); such lookups are counted.
class SequenceResolver {
 public:
  SequenceResolver(const embed::GlobalEmbeddings& embeddings, embed::EmbeddingConfig oov);

  Sequence resolve(const Session& session, std::string_view system);

  /// Table columns followed by the fallback columns.
  Eigen::MatrixXd matrix() const;
  std::uint64_t unresolved() const { return unresolved_; }

 private:
  const embed::GlobalEmbeddings* embeddings_;
  embed::EmbeddingConfig oov_;
  std::map<std::string, int> extra_index_;
  std::vector<Eigen::VectorXd> extra_;
  std::uint64_t unresolved_ = 0;
};

CrossSystemData assemble(const LabeledSessions& source, const LabeledSessions& target,
                         const embed::GlobalEmbeddings& embeddings,
                         const embed::EmbeddingConfig& oov = {});

/// Both systems embedded against one table (idf from the source templates
/// when TF-IDF weighting is configured) and assembled for training.
struct PreparedPair {
  LabeledSessions source;
  LabeledSessions target;
  embed::GlobalEmbeddings embeddings;
  CrossSystemData data;
};

PreparedPair prepare_pair(LabeledSessions source, LabeledSessions target,
                          const embed::WordVectorTable& table, const embed::EmbeddingConfig& config);

}  // namespace zerolog::data
