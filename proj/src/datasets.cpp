#include "zerolog/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include "wordstock.hpp"
#include "zerolog/error.hpp"
#include "zerolog/rng.hpp"

namespace zerolog::data {

using parser::RawLogLine;

std::size_t LabeledSessions::anomalous() const {
  return static_cast<std::size_t>(std::count_if(sessions.begin(), sessions.end(), [](const Session& s) {
    return s.label == Label::Anomalous;
  }));
}

std::size_t LabeledSessions::normal() const {
  return static_cast<std::size_t>(std::count_if(sessions.begin(), sessions.end(), [](const Session& s) {
    return s.label == Label::Normal;
  }));
}

CorpusManifest manifest_of(const LabeledSessions& corpus, Role role,
                           std::vector<std::filesystem::path> paths) {
  CorpusManifest m;
  m.system_id = corpus.system_id;
  m.role = role;
  m.paths = std::move(paths);
  m.lines = corpus.lines;
  m.sessions = corpus.sessions.size();
  m.normal = corpus.normal();
  m.anomalous = corpus.anomalous();
  return m;
}

namespace {

std::vector<RawLogLine> read_file_lines(const std::filesystem::path& path, const std::string& system) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Input, "cannot open " + path.string());
  return parser::read_raw_lines(in, system);
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

LabeledSessions from_parsed(parser::ParsedCorpus parsed, std::string system, std::uint64_t lines) {
  LabeledSessions out;
  out.system_id = std::move(system);
  out.store = std::move(parsed.store);
  out.sessions = std::move(parsed.grouped.sessions);
  out.lines = lines;
  out.dropped = parsed.degenerate_lines + parsed.grouped.dropped_lines;
  return out;
}

}  // namespace

std::map<std::string, Label> read_label_table(std::istream& in) {
  std::map<std::string, Label> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorKind::Format, "label table row " + std::to_string(row) + " has no comma");
    const std::string key = trim(line.substr(0, comma));
    const std::string value = trim(line.substr(comma + 1));
    if (value == "Normal") {
      out[key] = Label::Normal;
    } else if (value == "Anomaly" || value == "Anomalous") {
      out[key] = Label::Anomalous;
    } else if (row == 1 && value == "Label") {
      continue;  // header
    } else {
      throw Error(ErrorKind::Format, "label table row " + std::to_string(row) + ": unknown label '" +
                                         value + "'");
    }
  }
  return out;
}

LabeledSessions load_hdfs(std::span<const RawLogLine> lines, const std::map<std::string, Label>& labels,
                          const parser::LogProfile& profile) {
  auto parsed = parser::parse_corpus(lines, profile.drain, profile.sessions);
  auto out = from_parsed(std::move(parsed), profile.sessions.system_id, lines.size());
  std::vector<Session> joined;
  joined.reserve(out.sessions.size());
  for (auto& s : out.sessions) {
    const auto it = labels.find(s.session_key);
    if (it == labels.end()) {
      ++out.dropped;
      continue;
    }
    s.label = it->second;
    joined.push_back(std::move(s));
  }
  if (joined.empty()) throw Error(ErrorKind::Join, "no HDFS block joined with the label table");
  out.sessions = std::move(joined);
  return out;
}

LabeledSessions load_hdfs(const std::filesystem::path& log, const std::filesystem::path& labels) {
  std::ifstream in(labels, std::ios::binary);
  if (!in) throw Error(ErrorKind::Input, "cannot open " + labels.string());
  const auto table = read_label_table(in);
  const auto lines = read_file_lines(log, "hdfs");
  return load_hdfs(lines, table);
}

LabeledSessions load_bgl(std::span<const RawLogLine> lines, const parser::LogProfile& profile) {
  std::vector<RawLogLine> kept;
  std::vector<bool> tagged;
  std::uint64_t malformed = 0;
  kept.reserve(lines.size());
  for (const auto& line : lines) {
    std::istringstream fields(line.text);
    std::string first, field;
    fields >> first;
    std::size_t n = first.empty() ? 0 : 1;
    while (fields >> field) ++n;
    if (n < 10) {
      ++malformed;
      continue;
    }
    kept.push_back(line);
  }
  auto parsed = parser::parse_corpus(kept, profile.drain, profile.sessions);
  // Anomaly tag of each parsed event, aligned with parsed.events.
  std::vector<bool> anomalous_event;
  anomalous_event.reserve(parsed.events.size());
  for (const auto& ev : parsed.events) anomalous_event.push_back(ev.line.text.rfind("- ", 0) != 0);
  const auto members = parsed.grouped.members;
  auto out = from_parsed(std::move(parsed), profile.sessions.system_id, lines.size());
  out.dropped += malformed;
  for (std::size_t s = 0; s < out.sessions.size(); ++s) {
    bool any = false;
    for (std::size_t i : members[s]) any = any || anomalous_event[i];
    out.sessions[s].label = any ? Label::Anomalous : Label::Normal;
  }
  return out;
}

LabeledSessions load_bgl(const std::filesystem::path& log, const parser::LogProfile& profile) {
  const auto lines = read_file_lines(log, profile.sessions.system_id);
  return load_bgl(lines, profile);
}

LabeledSessions load_openstack(std::span<const RawLogLine> lines,
                               const std::vector<std::string>& anomalous_ids,
                               const parser::LogProfile& profile) {
  const std::set<std::string> bad(anomalous_ids.begin(), anomalous_ids.end());
  auto parsed = parser::parse_corpus(lines, profile.drain, profile.sessions);
  auto out = from_parsed(std::move(parsed), profile.sessions.system_id, lines.size());
  for (auto& s : out.sessions) s.label = bad.count(s.session_key) ? Label::Anomalous : Label::Normal;
  return out;
}

LabeledSessions load_openstack(std::span<const std::filesystem::path> logs,
                               const std::filesystem::path& anomalous_ids) {
  std::vector<RawLogLine> lines;
  for (const auto& p : logs) {
    auto part = read_file_lines(p, "openstack");
    lines.insert(lines.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  std::ifstream in(anomalous_ids, std::ios::binary);
  if (!in) throw Error(ErrorKind::Input, "cannot open " + anomalous_ids.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line))
    if (auto t = trim(line); !t.empty()) ids.push_back(std::move(t));
  return load_openstack(lines, ids);
}

std::vector<std::vector<std::size_t>> split_corpus(std::span<const Session> sessions,
                                                   std::span<const double> fractions,
                                                   std::uint64_t seed) {
  double total = 0;
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw Error(ErrorKind::Config, "split fraction outside [0, 1]");
    total += f;
  }
  if (total > 1.0 + 1e-12) throw Error(ErrorKind::Config, "split fractions sum above 1");

  std::vector<std::vector<std::size_t>> out(fractions.size());
  Rng rng(seed);
  for (Label cls : {Label::Normal, Label::Anomalous, Label::Unlabeled}) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < sessions.size(); ++i)
      if (sessions[i].label == cls) ids.push_back(i);
    if (ids.empty()) continue;
    shuffle(std::span<std::size_t>(ids), rng);
    double cum = 0;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < fractions.size(); ++k) {
      cum += fractions[k];
      const auto end = std::min(ids.size(), static_cast<std::size_t>(std::llround(cum * ids.size())));
      if (end <= begin)
        throw Error(ErrorKind::Config, "split " + std::to_string(k) + " gets no sessions of a class");
      out[k].insert(out[k].end(), ids.begin() + begin, ids.begin() + end);
      begin = end;
    }
  }
  for (auto& split : out) std::sort(split.begin(), split.end());
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic systems

void SyntheticSpec::validate() const {
  if (templates_per_system < 4) throw Error(ErrorKind::Config, "templates_per_system must be >= 4");
  if (!(vocabulary_overlap >= 0.0 && vocabulary_overlap <= 1.0))
    throw Error(ErrorKind::Config, "vocabulary_overlap must be in [0, 1]");
  if (!(anomaly_rate > 0.0 && anomaly_rate < 1.0))
    throw Error(ErrorKind::Config, "anomaly_rate must be in (0, 1)");
  if (min_session_length < 2 || max_session_length < min_session_length)
    throw Error(ErrorKind::Config, "session length range must satisfy 2 <= min <= max");
  if (!(shift_strength >= 0.0) || !std::isfinite(shift_strength))
    throw Error(ErrorKind::Config, "shift_strength must be >= 0");
  if (sessions_per_system < 2) throw Error(ErrorKind::Config, "sessions_per_system must be >= 2");
}

namespace {

constexpr std::size_t kDim = 300;

enum class SlotKind { Benign, Failure, Component, Host, Num, Ip, Hex, Path };

struct Slot {
  SlotKind kind;
  std::size_t index = 0;  // concept or component index
};

using Skeleton = std::vector<Slot>;

Eigen::VectorXd random_unit(Rng& rng) {
  Eigen::VectorXd v(kDim);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform(rng, -1.0, 1.0);
  return v.normalized();
}

constexpr double kSynonymSpread = 0.6;
constexpr double kFailureSpread = 0.8;
constexpr double kOovShare = 0.1;
constexpr double kFailureShare = 0.25;

embed::WordVectorTable build_word_vectors(Rng& rng) {
  embed::WordVectorTable table(kDim);
  const auto add_group = [&](const wordstock::Synonyms& words, const Eigen::VectorXd& centroid) {
    for (auto w : words) {
      const Eigen::VectorXd v = (centroid + kSynonymSpread * random_unit(rng)).normalized();
      // Drawn even when left out so the other vectors do not depend on it.
      if (bernoulli(rng, kOovShare)) continue;
      table.insert(std::string(w), v);
    }
  };
  for (const auto& group : wordstock::benign()) add_group(group, random_unit(rng));
  const Eigen::VectorXd failure_axis = random_unit(rng);
  for (const auto& group : wordstock::failure()) {
    const Eigen::VectorXd centroid = (failure_axis + kFailureSpread * random_unit(rng)).normalized();
    for (auto w : group) table.insert(std::string(w), (centroid + kSynonymSpread * random_unit(rng)).normalized());
  }
  for (auto w : wordstock::components()) {
    const Eigen::VectorXd v = random_unit(rng);
    if (bernoulli(rng, kOovShare)) continue;
    table.insert(std::string(w), v);
  }
  for (auto w : wordstock::hosts()) table.insert(std::string(w), random_unit(rng));
  for (auto w : wordstock::placeholders()) table.insert(std::string(w), random_unit(rng));
  return table;
}

Skeleton make_skeleton(Rng& rng, bool failure) {
  const std::size_t n_benign_concepts = wordstock::benign().size();
  Skeleton sk;
  const std::size_t concepts = (failure ? 2 : 3) + uniform_index(rng, 3);
  std::vector<std::size_t> picked;
  while (picked.size() < concepts) {
    const std::size_t c = uniform_index(rng, n_benign_concepts);
    if (std::find(picked.begin(), picked.end(), c) == picked.end()) picked.push_back(c);
  }
  for (std::size_t c : picked) sk.push_back({SlotKind::Benign, c});
  if (failure) {
    const Slot f{SlotKind::Failure, uniform_index(rng, wordstock::failure().size())};
    sk.insert(sk.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, sk.size() + 1)), f);
  }
  // Parameters never sit in the first two positions, which route the parse tree.
  const std::size_t params = uniform_index(rng, 3);
  for (std::size_t i = 0; i < params; ++i) {
    static constexpr SlotKind kinds[] = {SlotKind::Num, SlotKind::Ip, SlotKind::Hex, SlotKind::Path};
    const Slot p{kinds[uniform_index(rng, 4)]};
    sk.insert(sk.begin() + static_cast<std::ptrdiff_t>(2 + uniform_index(rng, sk.size() - 1)), p);
  }
  if (bernoulli(rng, 0.3))
    sk.insert(sk.begin() + static_cast<std::ptrdiff_t>(2 + uniform_index(rng, sk.size() - 1)),
              Slot{SlotKind::Host});
  return sk;
}

// Target counterpart of a source skeleton: benign concepts drift with the
// shift, the failure concept stays.
Skeleton drift(const Skeleton& sk, double shift, Rng& rng) {
  const double p = std::min(1.0, 0.5 * shift);
  Skeleton out = sk;
  for (auto& slot : out)
    if (slot.kind == SlotKind::Benign && bernoulli(rng, p))
      slot.index = uniform_index(rng, wordstock::benign().size());
  return out;
}

void add_components(Skeleton& sk, double shift, std::span<const std::size_t> own, Rng& rng) {
  const auto whole = static_cast<std::size_t>(std::floor(shift));
  const std::size_t n = whole + (bernoulli(rng, shift - static_cast<double>(whole)) ? 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Slot c{SlotKind::Component, own[uniform_index(rng, own.size())]};
    sk.insert(sk.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, sk.size() + 1)), c);
  }
}

struct SystemPlan {
  std::string id;
  std::vector<Skeleton> templates;       // benign first, then failure
  std::size_t benign = 0;
  std::vector<std::size_t> benign_word;   // synonym choice per benign concept
  std::vector<std::size_t> failure_word;  // synonym choice per failure concept
  std::vector<std::vector<std::pair<std::size_t, double>>> successors;
  std::vector<std::size_t> starts;
};

std::vector<std::size_t> choose_words(std::size_t concepts, Rng& rng) {
  std::vector<std::size_t> w(concepts);
  for (auto& x : w) x = uniform_index(rng, 4);
  return w;
}

std::vector<std::size_t> follow_words(const std::vector<std::size_t>& src, double overlap, Rng& rng) {
  std::vector<std::size_t> w(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    w[i] = src[i];
    if (!bernoulli(rng, overlap)) w[i] = (src[i] + 1 + uniform_index(rng, 3)) % 4;
  }
  return w;
}

void make_chain(SystemPlan& plan, Rng& rng) {
  const std::size_t b = plan.benign;
  plan.successors.assign(b, {});
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t fanout = std::min<std::size_t>(3, b);
    std::vector<std::size_t> next;
    while (next.size() < fanout) {
      const std::size_t j = uniform_index(rng, b);
      if (std::find(next.begin(), next.end(), j) == next.end()) next.push_back(j);
    }
    for (std::size_t j : next) plan.successors[i].emplace_back(j, uniform(rng, 0.2, 1.0));
  }
  for (std::size_t k = 0; k < std::min<std::size_t>(3, b); ++k) plan.starts.push_back(uniform_index(rng, b));
}

std::size_t step(const std::vector<std::pair<std::size_t, double>>& next, Rng& rng) {
  double total = 0;
  for (const auto& [j, w] : next) total += w;
  double u = uniform01(rng) * total;
  for (const auto& [j, w] : next) {
    if (u < w) return j;
    u -= w;
  }
  return next.back().first;
}

std::string render(const SystemPlan& plan, const Skeleton& sk, Rng& rng) {
  std::string out;
  char buf[64];
  for (const auto& slot : sk) {
    if (!out.empty()) out += ' ';
    switch (slot.kind) {
      case SlotKind::Benign: out += wordstock::benign()[slot.index][plan.benign_word[slot.index]]; break;
      case SlotKind::Failure: out += wordstock::failure()[slot.index][plan.failure_word[slot.index]]; break;
      case SlotKind::Component: out += wordstock::components()[slot.index]; break;
      case SlotKind::Host: out += wordstock::hosts()[uniform_index(rng, wordstock::hosts().size())]; break;
      case SlotKind::Num: out += std::to_string(uniform_index(rng, 100000)); break;
      case SlotKind::Ip:
        std::snprintf(buf, sizeof buf, "10.%u.%u.%u:%u", unsigned(uniform_index(rng, 256)),
                      unsigned(uniform_index(rng, 256)), unsigned(uniform_index(rng, 256)),
                      unsigned(1024 + uniform_index(rng, 60000)));
        out += buf;
        break;
      case SlotKind::Hex:
        std::snprintf(buf, sizeof buf, "0x%08x", unsigned(uniform_index(rng, 0x100000000ULL)));
        out += buf;
        break;
      case SlotKind::Path:
        std::snprintf(buf, sizeof buf, "/data/%s/%u", plan.id.c_str(), unsigned(uniform_index(rng, 1000)));
        out += buf;
        break;
    }
  }
  return out;
}

SyntheticSystem emit(const SystemPlan& plan, const SyntheticSpec& spec, Rng& rng) {
  SyntheticSystem sys;
  sys.system_id = plan.id;
  const std::size_t n = spec.sessions_per_system;
  const auto n_bad = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(spec.anomaly_rate * static_cast<double>(n))), 1, n - 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(std::span<std::size_t>(order), rng);
  std::vector<bool> bad(n, false);
  for (std::size_t i = 0; i < n_bad; ++i) bad[order[i]] = true;

  const std::size_t failures = plan.templates.size() - plan.benign;
  std::vector<std::vector<std::size_t>> walks(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t len =
        spec.min_session_length + uniform_index(rng, spec.max_session_length - spec.min_session_length + 1);
    auto& w = walks[s];
    w.push_back(plan.starts[uniform_index(rng, plan.starts.size())]);
    while (w.size() < len) w.push_back(step(plan.successors[w.back()], rng));
    if (bad[s]) {
      const std::size_t k = 1 + (bernoulli(rng, 0.5) ? 1 : 0);
      for (std::size_t i = 0; i < k; ++i)
        w[1 + uniform_index(rng, len - 1)] = plan.benign + uniform_index(rng, failures);
    }
    const std::string key = "sess_" + std::to_string(s + 1);
    sys.session_keys.push_back(key);
    sys.labels[key] = bad[s] ? Label::Anomalous : Label::Normal;
  }

  // A few sessions are live at once; their lines interleave.
  constexpr std::size_t kConcurrent = 4;
  std::vector<std::pair<std::size_t, std::size_t>> live;  // session, next event
  std::size_t next_session = 0;
  std::uint64_t seq = 0;
  while (next_session < n || !live.empty()) {
    while (live.size() < kConcurrent && next_session < n) live.emplace_back(next_session++, 0);
    const std::size_t pick = uniform_index(rng, live.size());
    auto& [s, e] = live[pick];
    const std::size_t t = walks[s][e];
    const bool failure = t >= plan.benign;
    std::string line = std::to_string(++seq) + (failure ? " ERROR " : " INFO ") +
                       render(plan, plan.templates[t], rng) + " session=" + sys.session_keys[s];
    sys.lines.push_back(std::move(line));
    if (++e == walks[s].size()) live.erase(live.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return sys;
}

}  // namespace

SyntheticPair generate_synthetic_pair(const SyntheticSpec& spec) {
  spec.validate();
  const auto stream = [&](std::uint64_t salt) {
    std::uint64_t state = spec.seed ^ salt;
    return Rng(splitmix64(state));
  };
  Rng world = stream(0);
  SyntheticPair pair;
  pair.word_vectors = build_word_vectors(world);

  const auto n_fail = std::max<std::size_t>(
      1, static_cast<std::size_t>(kFailureShare * static_cast<double>(spec.templates_per_system)));
  const std::size_t n_benign = spec.templates_per_system - n_fail;

  std::vector<std::size_t> components(wordstock::components().size());
  std::iota(components.begin(), components.end(), 0);
  shuffle(std::span<std::size_t>(components), world);
  const std::size_t per_system = components.size() / 2;
  const std::span<const std::size_t> own_source(components.data(), per_system);
  const std::span<const std::size_t> own_target(components.data() + per_system, per_system);

  SystemPlan src, tgt;
  src.id = "source";
  tgt.id = "target";
  src.benign = tgt.benign = n_benign;
  for (std::size_t i = 0; i < spec.templates_per_system; ++i) {
    Skeleton sk = make_skeleton(world, i >= n_benign);
    Skeleton drifted = drift(sk, spec.shift_strength, world);
    add_components(sk, spec.shift_strength, own_source, world);
    add_components(drifted, spec.shift_strength, own_target, world);
    src.templates.push_back(std::move(sk));
    tgt.templates.push_back(std::move(drifted));
  }
  src.benign_word = choose_words(wordstock::benign().size(), world);
  src.failure_word = choose_words(wordstock::failure().size(), world);
  tgt.benign_word = follow_words(src.benign_word, spec.vocabulary_overlap, world);
  tgt.failure_word = follow_words(src.failure_word, spec.vocabulary_overlap, world);
  make_chain(src, world);
  make_chain(tgt, world);

  Rng source_rng = stream(0x5011);
  Rng target_rng = stream(0x7A26);
  pair.source = emit(src, spec, source_rng);
  pair.target = emit(tgt, spec, target_rng);
  return pair;
}

LabeledSessions parse_synthetic(const SyntheticSystem& system) {
  auto prof = parser::profile("synthetic");
  prof.sessions.system_id = system.system_id;
  std::vector<RawLogLine> lines;
  lines.reserve(system.lines.size());
  for (std::size_t i = 0; i < system.lines.size(); ++i)
    lines.push_back(RawLogLine{system.system_id, i + 1, system.lines[i]});
  auto parsed = parser::parse_corpus(lines, prof.drain, prof.sessions);
  auto out = from_parsed(std::move(parsed), system.system_id, lines.size());
  for (auto& s : out.sessions) {
    const auto it = system.labels.find(s.session_key);
    s.label = it == system.labels.end() ? Label::Unlabeled : it->second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

SequenceResolver::SequenceResolver(const embed::GlobalEmbeddings& embeddings, embed::EmbeddingConfig oov)
    : embeddings_(&embeddings), oov_(std::move(oov)) {}

Sequence SequenceResolver::resolve(const Session& session, std::string_view system) {
  Sequence seq;
  seq.reserve(session.event_ids.size());
  const auto base = static_cast<int>(embeddings_->size());
  for (auto id : session.event_ids) {
    if (const auto col = embeddings_->column(system, id)) {
      seq.push_back(static_cast<int>(*col));
      continue;
    }
    ++unresolved_;
    const std::string key = embed::GlobalEmbeddings::key(system, id);
    auto [it, inserted] = extra_index_.emplace(key, base + static_cast<int>(extra_.size()));
    if (inserted) {
      const auto dim = embeddings_->dimension();
      extra_.push_back(oov_.oov_policy == embed::OovPolicy::SeededHash
                           ? embed::hashed_vector(key, dim, oov_.oov_seed)
                           : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)).eval());
    }
    seq.push_back(it->second);
  }
  return seq;
}

Eigen::MatrixXd SequenceResolver::matrix() const {
  const auto rows = static_cast<Eigen::Index>(embeddings_->dimension());
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(embeddings_->size() + extra_.size()));
  m.leftCols(static_cast<Eigen::Index>(embeddings_->size())) = embeddings_->matrix();
  for (std::size_t i = 0; i < extra_.size(); ++i)
    m.col(static_cast<Eigen::Index>(embeddings_->size() + i)) = extra_[i];
  return m;
}

CrossSystemData assemble(const LabeledSessions& source, const LabeledSessions& target,
                         const embed::GlobalEmbeddings& embeddings, const embed::EmbeddingConfig& oov) {
  SequenceResolver resolver(embeddings, oov);
  CrossSystemData out;
  for (const auto& s : source.sessions) {
    if (s.label == Label::Unlabeled)
      throw Error(ErrorKind::Input, "source session '" + s.session_key + "' has no label");
    out.training.source.sequences.push_back(resolver.resolve(s, source.system_id));
    out.training.source.labels.push_back(s.label == Label::Anomalous ? 1 : 0);
  }
  std::vector<int> gold;
  for (const auto& s : target.sessions) {
    out.training.target.sequences.push_back(resolver.resolve(s, target.system_id));
    gold.push_back(static_cast<int>(s.label));
    out.target_keys.push_back(s.session_key);
  }
  out.target_gold = GoldLabels(std::move(gold));
  out.training.inputs = resolver.matrix();
  return out;
}

PreparedPair prepare_pair(LabeledSessions source, LabeledSessions target,
                          const embed::WordVectorTable& table, const embed::EmbeddingConfig& config) {
  source.store.freeze();
  target.store.freeze();
  std::optional<embed::IdfTable> idf;
  if (config.aggregation == embed::Aggregation::TfIdfWeighted)
    idf = embed::IdfTable::from_templates(source.store.templates(), config.normalize_tokens);
  const embed::SystemTemplates stores[] = {{source.system_id, &source.store},
                                           {target.system_id, &target.store}};
  auto embeddings = embed::build_global_embeddings(stores, table, config, idf ? &*idf : nullptr);
  PreparedPair out{std::move(source), std::move(target), std::move(embeddings), {}};
  out.data = assemble(out.source, out.target, out.embeddings, config);
  return out;
}

}  // namespace zerolog::data
