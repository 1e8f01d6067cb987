#include "zerolog/log_parser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "zerolog/error.hpp"

namespace zerolog::parser {

namespace {

constexpr std::string_view kWildcardText = "<*>";

bool has_digit(std::string_view token) {
  return std::any_of(token.begin(), token.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::size_t LogTemplate::wildcard_count() const {
  return static_cast<std::size_t>(std::count_if(
      tokens.begin(), tokens.end(), [](const TemplateToken& t) { return t.wildcard; }));
}

std::string LogTemplate::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i].wildcard ? std::string(kWildcardText) : tokens[i].text;
  }
  return out;
}

MaskingRule::MaskingRule(std::string p, std::string r)
    : pattern(std::move(p)), replacement(std::move(r)) {
  try {
    compiled = std::regex(pattern, std::regex::ECMAScript | std::regex::optimize);
  } catch (const std::regex_error& e) {
    throw Error(ErrorKind::Config, "bad masking pattern '" + pattern + "': " + e.what());
  }
}

void DrainConfig::validate() const {
  if (tree_depth < 2) throw Error(ErrorKind::Config, "tree_depth must be >= 2");
  if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0))
    throw Error(ErrorKind::Config, "similarity_threshold must be in (0, 1]");
  if (max_children < 1) throw Error(ErrorKind::Config, "max_children must be >= 1");
}

std::vector<std::string> preprocess_line(const RawLogLine& line, const DrainConfig& config) {
  std::string content = line.text;
  if (!config.header_pattern.empty()) {
    // One compiled header regex per thread; a corpus uses a single pattern.
    static thread_local std::string cached_pattern;
    static thread_local std::regex cached;
    if (cached_pattern != config.header_pattern) {
      cached = std::regex(config.header_pattern);
      cached_pattern = config.header_pattern;
    }
    std::smatch m;
    if (std::regex_search(content, m, cached, std::regex_constants::match_continuous)) {
      content = m.suffix().str();
    }
  }
  for (const auto& rule : config.masking_rules) {
    content = std::regex_replace(content, rule.compiled, rule.replacement);
  }
  auto tokens = split_ws(content);
  if (tokens.empty()) {
    throw Error(ErrorKind::DegenerateLine,
                "line " + std::to_string(line.line_no) + " has no content tokens");
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// TemplateStore

const LogTemplate& TemplateStore::at(TemplateId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= templates_.size())
    throw Error(ErrorKind::Input, "unknown template id " + std::to_string(id));
  return templates_[static_cast<std::size_t>(id)];
}

LogTemplate& TemplateStore::mutable_at(TemplateId id) {
  if (frozen_) throw Error(ErrorKind::Config, "template store is frozen");
  return const_cast<LogTemplate&>(std::as_const(*this).at(id));
}

TemplateId TemplateStore::add(std::vector<TemplateToken> tokens, std::uint64_t match_count) {
  if (frozen_) throw Error(ErrorKind::Config, "template store is frozen");
  if (tokens.empty()) throw Error(ErrorKind::Input, "template without tokens");
  const auto id = static_cast<TemplateId>(templates_.size());
  templates_.push_back(LogTemplate{id, std::move(tokens), match_count});
  return id;
}

std::uint64_t TemplateStore::total_matches() const {
  std::uint64_t n = 0;
  for (const auto& t : templates_) n += t.match_count;
  return n;
}

// ---------------------------------------------------------------------------
// Drain

struct DrainParser::Node {
  std::map<std::string, std::unique_ptr<Node>, std::less<>> children;
  std::vector<TemplateId> leaf;
};

DrainParser::DrainParser(DrainConfig config) : config_(std::move(config)) {
  config_.validate();
}
DrainParser::~DrainParser() = default;
DrainParser::DrainParser(DrainParser&&) noexcept = default;
DrainParser& DrainParser::operator=(DrainParser&&) noexcept = default;

double DrainParser::similarity(const LogTemplate& tmpl, std::span<const std::string> tokens) {
  if (tmpl.tokens.size() != tokens.size() || tokens.empty()) return 0.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tmpl.tokens[i];
    if (t.wildcard || t.text == tokens[i]) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(tokens.size());
}

TemplateId DrainParser::parse_line(std::span<const std::string> tokens) {
  if (tokens.empty()) throw Error(ErrorKind::EmptyInput, "parse_line: empty token list");
  if (store_.frozen()) throw Error(ErrorKind::Config, "parse_line: template store is frozen");

  auto& root = by_length_[tokens.size()];
  if (!root) root = std::make_unique<Node>();
  Node* node = root.get();
  const std::size_t prefix = std::min(config_.tree_depth - 2, tokens.size());
  for (std::size_t i = 0; i < prefix; ++i) {
    std::string key = has_digit(tokens[i]) ? std::string(kWildcardText) : tokens[i];
    auto it = node->children.find(key);
    if (it == node->children.end()) {
      std::size_t literal_children = node->children.size();
      if (node->children.contains(kWildcardText)) --literal_children;
      if (key != kWildcardText && literal_children >= config_.max_children) {
        key = std::string(kWildcardText);
      }
      it = node->children.find(key);
      if (it == node->children.end()) {
        it = node->children.emplace(key, std::make_unique<Node>()).first;
      }
    }
    node = it->second.get();
  }

  ++lines_parsed_;
  TemplateId best = -1;
  double best_sim = -1.0;
  for (TemplateId id : node->leaf) {  // ascending: ids are appended in creation order
    const double sim = similarity(store_.at(id), tokens);
    if (sim > best_sim) {
      best_sim = sim;
      best = id;
    }
  }
  if (best >= 0 && best_sim >= config_.similarity_threshold) {
    auto& tmpl = store_.mutable_at(best);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!tmpl.tokens[i].wildcard && tmpl.tokens[i].text != tokens[i])
        tmpl.tokens[i] = TemplateToken::any();
    }
    ++tmpl.match_count;
    return best;
  }

  std::vector<TemplateToken> fresh;
  fresh.reserve(tokens.size());
  for (const auto& t : tokens) fresh.push_back(TemplateToken::literal(t));
  const TemplateId id = store_.add(std::move(fresh), 1);
  node->leaf.push_back(id);
  return id;
}

ParsedEvent DrainParser::parse_event(std::span<const std::string> tokens) {
  ParsedEvent ev;
  ev.template_id = parse_line(tokens);
  const auto& tmpl = store_.at(ev.template_id);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tmpl.tokens[i].wildcard) ev.parameters.push_back(tokens[i]);
  }
  return ev;
}

TemplateStore DrainParser::release() {
  store_.freeze();
  TemplateStore out = std::move(store_);
  store_ = TemplateStore{};
  by_length_.clear();
  return out;
}

// ---------------------------------------------------------------------------
// Sessions

char label_char(Label label) {
  switch (label) {
    case Label::Normal: return '0';
    case Label::Anomalous: return '1';
    case Label::Unlabeled: return '-';
  }
  return '-';
}

Label label_from_char(char c) {
  switch (c) {
    case '0': return Label::Normal;
    case '1': return Label::Anomalous;
    case '-': return Label::Unlabeled;
    default: throw Error(ErrorKind::Format, std::string("bad label '") + c + "'");
  }
}

void SessionSpec::validate() const {
  if (const auto* f = std::get_if<FixedCount>(&strategy); f && f->n < 1)
    throw Error(ErrorKind::Config, "FixedCount n must be >= 1");
  if (const auto* w = std::get_if<TimeWindow>(&strategy)) {
    if (!(w->seconds > 0.0)) throw Error(ErrorKind::Config, "TimeWindow seconds must be > 0");
    if (!(w->stride > 0.0 && w->stride <= w->seconds))
      throw Error(ErrorKind::Config, "TimeWindow stride must be in (0, seconds]");
  }
  if (const auto* k = std::get_if<KeyRegex>(&strategy); k && k->pattern.empty())
    throw Error(ErrorKind::Config, "KeyRegex pattern is empty");
}

namespace {

GroupResult group_by_key(std::span<const LineEvent> events, const KeyRegex& spec) {
  const std::regex re(spec.pattern);
  GroupResult out;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < events.size(); ++i) {
    std::smatch m;
    if (!std::regex_search(events[i].line.text, m, re)) {
      ++out.dropped_lines;
      continue;
    }
    const std::string key = m.size() > 1 && m[1].matched ? m.str(1) : m.str(0);
    auto [it, inserted] = index.emplace(key, out.sessions.size());
    if (inserted) {
      out.sessions.push_back(Session{key, {}, Label::Unlabeled});
      out.members.emplace_back();
    }
    out.sessions[it->second].event_ids.push_back(events[i].event.template_id);
    out.members[it->second].push_back(i);
  }
  if (out.sessions.empty())
    throw Error(ErrorKind::EmptyInput, "KeyRegex '" + spec.pattern + "' matched no lines");
  return out;
}

GroupResult group_fixed(std::span<const LineEvent> events, const FixedCount& spec) {
  GroupResult out;
  for (std::size_t start = 0; start < events.size(); start += spec.n) {
    const std::size_t end = std::min(events.size(), start + spec.n);
    Session s{"chunk_" + std::to_string(out.sessions.size()), {}, Label::Unlabeled};
    std::vector<std::size_t> members;
    for (std::size_t i = start; i < end; ++i) {
      s.event_ids.push_back(events[i].event.template_id);
      members.push_back(i);
    }
    out.sessions.push_back(std::move(s));
    out.members.push_back(std::move(members));
  }
  return out;
}

GroupResult group_windows(std::span<const LineEvent> events, const TimeWindow& spec) {
  const std::regex re(spec.timestamp_pattern);
  GroupResult out;
  std::vector<std::pair<double, std::size_t>> stamped;
  for (std::size_t i = 0; i < events.size(); ++i) {
    std::smatch m;
    if (!std::regex_search(events[i].line.text, m, re) || m.size() < 2) {
      ++out.dropped_lines;
      continue;
    }
    stamped.emplace_back(std::stod(m.str(1)), i);
  }
  if (stamped.empty()) return out;
  double t0 = stamped.front().first;
  for (const auto& [t, _] : stamped) t0 = std::min(t0, t);

  // Window k covers [t0 + k*stride, t0 + k*stride + seconds).
  std::map<std::size_t, std::vector<std::size_t>> windows;
  for (std::size_t j = 0; j < stamped.size(); ++j) {
    const double t = stamped[j].first;
    const auto last_k = static_cast<std::size_t>(std::floor((t - t0) / spec.stride));
    const double lo = std::ceil((t - t0 - spec.seconds) / spec.stride);
    auto k = lo > 0 ? static_cast<std::size_t>(lo) - 1 : 0;  // one early, rechecked below
    for (; k <= last_k + 1; ++k) {
      const double begin = t0 + static_cast<double>(k) * spec.stride;
      if (t >= begin && t < begin + spec.seconds) windows[k].push_back(j);
    }
  }
  for (const auto& [k, members] : windows) {
    Session s{"window_" + std::to_string(k), {}, Label::Unlabeled};
    std::vector<std::size_t> ids;
    for (std::size_t j : members) {
      const std::size_t i = stamped[j].second;
      s.event_ids.push_back(events[i].event.template_id);
      ids.push_back(i);
    }
    out.sessions.push_back(std::move(s));
    out.members.push_back(std::move(ids));
  }
  return out;
}

}  // namespace

GroupResult group_sessions(std::span<const LineEvent> events, const SessionSpec& spec) {
  spec.validate();
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].line.line_no < events[i - 1].line.line_no)
      throw Error(ErrorKind::Input, "group_sessions: events not ordered by line_no");
  }
  return std::visit(
      [&](const auto& strategy) -> GroupResult {
        using T = std::decay_t<decltype(strategy)>;
        if constexpr (std::is_same_v<T, KeyRegex>) return group_by_key(events, strategy);
        else if constexpr (std::is_same_v<T, FixedCount>) return group_fixed(events, strategy);
        else return group_windows(events, strategy);
      },
      spec.strategy);
}

ParsedCorpus parse_corpus(std::span<const RawLogLine> lines, const DrainConfig& drain,
                          const SessionSpec& sessions) {
  DrainParser parser(drain);
  ParsedCorpus out;
  out.events.reserve(lines.size());
  for (const auto& line : lines) {
    std::vector<std::string> tokens;
    try {
      tokens = preprocess_line(line, drain);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateLine) throw;
      ++out.degenerate_lines;
      continue;
    }
    out.events.push_back(LineEvent{line, parser.parse_event(tokens)});
  }
  out.store = parser.release();
  // Parameters were captured against the template as it stood when the line
  // arrived; later merges may have widened it.
  for (auto& ev : out.events) {
    const auto& tmpl = out.store.at(ev.event.template_id);
    if (ev.event.parameters.size() == tmpl.wildcard_count()) continue;
    auto tokens = preprocess_line(ev.line, drain);
    ev.event.parameters.clear();
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (tmpl.tokens[i].wildcard) ev.event.parameters.push_back(tokens[i]);
  }
  out.grouped = group_sessions(out.events, sessions);
  return out;
}

std::vector<RawLogLine> read_raw_lines(std::istream& in, std::string system_id) {
  std::vector<RawLogLine> out;
  std::string line;
  std::uint64_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(RawLogLine{system_id, no, std::move(line)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text formats

void write_templates(std::ostream& out, const TemplateStore& store) {
  for (const auto& t : store.templates()) out << t.template_id << '\t' << t.text() << '\n';
}

TemplateStore read_templates(std::istream& in) {
  TemplateStore store;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorKind::Format, "templates: missing tab");
    const long id = std::stol(line.substr(0, tab));
    if (id != static_cast<long>(store.size()))
      throw Error(ErrorKind::Format, "templates: ids must be dense and ordered");
    std::vector<TemplateToken> tokens;
    for (auto& tok : split_ws(std::string_view(line).substr(tab + 1))) {
      tokens.push_back(tok == kWildcardText ? TemplateToken::any()
                                            : TemplateToken::literal(std::move(tok)));
    }
    store.add(std::move(tokens), 0);
  }
  store.freeze();
  return store;
}

void write_sessions(std::ostream& out, std::span<const Session> sessions) {
  for (const auto& s : sessions) {
    out << s.session_key << '\t' << label_char(s.label) << '\t';
    for (std::size_t i = 0; i < s.event_ids.size(); ++i) {
      if (i) out << ' ';
      out << s.event_ids[i];
    }
    out << '\n';
  }
}

std::vector<Session> read_sessions(std::istream& in) {
  std::vector<Session> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || t2 != t1 + 2)
      throw Error(ErrorKind::Format, "sessions line " + std::to_string(no) + ": bad layout");
    Session s;
    s.session_key = line.substr(0, t1);
    s.label = label_from_char(line[t1 + 1]);
    std::istringstream ids(line.substr(t2 + 1));
    TemplateId id;
    while (ids >> id) s.event_ids.push_back(id);
    if (s.event_ids.empty())
      throw Error(ErrorKind::Format, "sessions line " + std::to_string(no) + ": no events");
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Profiles

namespace {

std::vector<MaskingRule> common_masks() {
  return {
      {R"(\b[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}\b)", "<UUID>"},
      {R"(\b\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3}(:\d+)?\b)", "<IP>"},
      {R"(\b0x[0-9a-fA-F]+\b)", "<HEX>"},
      {R"((/[\w.\-]+)+/?)", "<PATH>"},
      {R"(\b-?\d+(\.\d+)?\b)", "<NUM>"},
  };
}

}  // namespace

LogProfile profile(std::string_view name) {
  LogProfile p;
  p.name = std::string(name);
  if (name == "hdfs") {
    p.drain.header_pattern = R"(\d{6}\s+\d{6}\s+\d+\s+\w+\s+[^:\s]+:\s*)";
    p.drain.masking_rules.emplace_back(R"(blk_-?\d+)", "<ID>");
    for (auto& r : common_masks()) p.drain.masking_rules.push_back(std::move(r));
    p.sessions.strategy = KeyRegex{R"(blk_-?\d+)"};
  } else if (name == "bgl") {
    // alert-tag epoch date node time node type component level
    p.drain.header_pattern = R"((\S+\s+){9})";
    p.drain.masking_rules.emplace_back(R"(\bR\d+-M\d+-N[\w:-]+\b)", "<NODE>");
    for (auto& r : common_masks()) p.drain.masking_rules.push_back(std::move(r));
    p.sessions.strategy = FixedCount{60};
  } else if (name == "openstack") {
    // file date time pid level component
    p.drain.header_pattern = R"((\S+\s+){3}\d+\s+\w+\s+\S+\s+)";
    p.drain.masking_rules.emplace_back(R"(\[req-[^\]]*\])", "<REQ>");
    for (auto& r : common_masks()) p.drain.masking_rules.push_back(std::move(r));
    // request ids are uuids too, so anchor on the instance tag
    p.sessions.strategy =
        KeyRegex{R"(\[instance: ([0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12})\])"};
  } else if (name == "synthetic") {
    // <seq> <LEVEL> <content ...> session=sess_N
    p.drain.header_pattern = R"(\d+\s+[A-Z]+\s+)";
    p.drain.masking_rules.emplace_back(R"(session=sess_\d+)", "");
    for (auto& r : common_masks()) p.drain.masking_rules.push_back(std::move(r));
    p.sessions.strategy = KeyRegex{R"(sess_\d+)"};
  } else if (name == "plain") {
    p.drain.masking_rules = common_masks();
    p.sessions.strategy = FixedCount{1};
  } else {
    throw Error(ErrorKind::Config, "unknown log profile '" + std::string(name) + "'");
  }
  p.sessions.system_id = p.name;
  return p;
}

}  // namespace zerolog::parser
