#pragma once

// Raw log lines -> Drain templates -> sessions.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace zerolog::parser {

using TemplateId = std::int32_t;

struct RawLogLine {
  std::string system_id;
  std::uint64_t line_no = 0;
  std::string text;
};

struct TemplateToken {
  std::string text;
  bool wildcard = false;

  static TemplateToken literal(std::string t) { return {std::move(t), false}; }
  static TemplateToken any() { return {"<*>", true}; }

  friend bool operator==(const TemplateToken&, const TemplateToken&) = default;
};

struct LogTemplate {
  TemplateId template_id = 0;
  std::vector<TemplateToken> tokens;
  std::uint64_t match_count = 0;

  std::size_t wildcard_count() const;
  std::size_t literal_count() const { return tokens.size() - wildcard_count(); }
  /// Tokens joined by single spaces, wildcards rendered as `<*>`.
  std::string text() const;
};

struct ParsedEvent {
  TemplateId template_id = 0;
  std::vector<std::string> parameters;
};

struct MaskingRule {
  MaskingRule(std::string pattern, std::string replacement);

  std::string pattern;
  std::string replacement;
  std::regex compiled;
};

struct DrainConfig {
  std::size_t tree_depth = 4;
  double similarity_threshold = 0.5;
  std::size_t max_children = 100;
  std::vector<MaskingRule> masking_rules;
  /// Regex matched at the start of each line; the matched prefix (timestamp,
  /// host, severity, ...) is removed before masking. Empty = no header.
  std::string header_pattern;

  /// Throws Error(Config) when a field is out of range.
  void validate() const;
};

/// Header stripping, masking, whitespace split. Throws Error(DegenerateLine)
/// when nothing is left.
std::vector<std::string> preprocess_line(const RawLogLine& line,
                                         const DrainConfig& config);

class TemplateStore {
 public:
  std::size_t size() const { return templates_.size(); }
  bool empty() const { return templates_.empty(); }
  const LogTemplate& at(TemplateId id) const;
  std::span<const LogTemplate> templates() const { return templates_; }

  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  /// Used by the parser and by file readers.
  TemplateId add(std::vector<TemplateToken> tokens, std::uint64_t match_count);
  LogTemplate& mutable_at(TemplateId id);

  std::uint64_t total_matches() const;

 private:
  std::vector<LogTemplate> templates_;
  bool frozen_ = false;
};

/// Fixed-depth prefix tree template miner (Drain).
///
/// Lines are routed by token count, then by their first `tree_depth - 2`
/// tokens (tokens containing a digit route through the `<*>` child, as does
/// any token arriving at a node that already holds `max_children` children).
/// Within a leaf, similarity is the fraction of positions where the template
/// holds a wildcard or the same literal; the best template (ties to the lowest
/// id) absorbs the line if its similarity reaches the threshold.
class DrainParser {
 public:
  explicit DrainParser(DrainConfig config);
  ~DrainParser();
  DrainParser(DrainParser&&) noexcept;
  DrainParser& operator=(DrainParser&&) noexcept;

  TemplateId parse_line(std::span<const std::string> tokens);
  ParsedEvent parse_event(std::span<const std::string> tokens);

  const TemplateStore& store() const { return store_; }
  const DrainConfig& config() const { return config_; }
  std::uint64_t lines_parsed() const { return lines_parsed_; }

  /// Freezes the store and hands it out; the parser is left empty.
  TemplateStore release();

  static double similarity(const LogTemplate& tmpl,
                           std::span<const std::string> tokens);

 private:
  struct Node;

  DrainConfig config_;
  TemplateStore store_;
  std::map<std::size_t, std::unique_ptr<Node>> by_length_;
  std::uint64_t lines_parsed_ = 0;
};

enum class Label : std::int8_t { Normal = 0, Anomalous = 1, Unlabeled = -1 };

char label_char(Label label);
Label label_from_char(char c);

struct Session {
  std::string session_key;
  std::vector<TemplateId> event_ids;
  Label label = Label::Unlabeled;

  friend bool operator==(const Session&, const Session&) = default;
};

struct KeyRegex {
  /// The key is the first capture group when there is one, else the match.
  std::string pattern;
};
struct FixedCount {
  std::size_t n = 1;
};
struct TimeWindow {
  double seconds = 60.0;
  double stride = 60.0;
  /// First capture group is read as a timestamp in seconds.
  std::string timestamp_pattern = R"(^\S+\s+(\d+(?:\.\d+)?))";
};

struct SessionSpec {
  std::variant<KeyRegex, FixedCount, TimeWindow> strategy = FixedCount{1};
  std::string system_id;

  void validate() const;
};

/// One parsed line together with the raw text it came from.
struct LineEvent {
  RawLogLine line;
  ParsedEvent event;
};

struct GroupResult {
  std::vector<Session> sessions;
  /// Sessions each event index went into, in the same order as `sessions`.
  std::vector<std::vector<std::size_t>> members;
  std::uint64_t dropped_lines = 0;
};

/// Sessions are emitted in first-seen key order (KeyRegex) or window order.
/// All sessions come out Unlabeled; loaders attach labels.
GroupResult group_sessions(std::span<const LineEvent> events,
                           const SessionSpec& spec);

/// Result of running preprocess + Drain + grouping over a stream of lines.
struct ParsedCorpus {
  TemplateStore store;
  std::vector<LineEvent> events;
  GroupResult grouped;
  std::uint64_t degenerate_lines = 0;
};

ParsedCorpus parse_corpus(std::span<const RawLogLine> lines,
                          const DrainConfig& drain, const SessionSpec& sessions);

std::vector<RawLogLine> read_raw_lines(std::istream& in, std::string system_id);

// Text formats:
//   templates: `<template_id>\t<tok> <tok> ...` (wildcards as `<*>`)
//   sessions:  `<session_key>\t<label>\t<id> <id> ...`, label in {0,1,-}
void write_templates(std::ostream& out, const TemplateStore& store);
TemplateStore read_templates(std::istream& in);
void write_sessions(std::ostream& out, std::span<const Session> sessions);
std::vector<Session> read_sessions(std::istream& in);

/// Shipped per-dataset settings: header rule, masking rules, session spec.
struct LogProfile {
  std::string name;
  DrainConfig drain;
  SessionSpec sessions;
};

/// Known names: hdfs, bgl, openstack, synthetic, plain.
LogProfile profile(std::string_view name);

}  // namespace zerolog::parser
