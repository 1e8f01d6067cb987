#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "oracles/drain_oracle.hpp"
#include "zerolog/error.hpp"
#include "zerolog/log_parser.hpp"
#include "zerolog/rng.hpp"

using namespace zerolog;
using namespace zerolog::parser;

namespace {

std::vector<RawLogLine> load(const char* path, const char* system = "synthetic") {
  std::ifstream in(path);
  REQUIRE(in);
  return read_raw_lines(in, system);
}

std::vector<oracle::Mask> masks_of(const DrainConfig& c) {
  std::vector<oracle::Mask> out;
  for (const auto& r : c.masking_rules) out.push_back({r.pattern, r.replacement});
  return out;
}

std::vector<std::string> toks(std::initializer_list<const char*> words) {
  return {words.begin(), words.end()};
}

}  // namespace

TEST_CASE("preprocess strips the header and applies masks in order") {
  const auto prof = profile("synthetic");
  RawLogLine line{"s", 1, "12 INFO Received block blk_1 of size 4096 from 10.0.0.1 session=sess_9"};
  CHECK(preprocess_line(line, prof.drain) ==
        toks({"Received", "block", "blk_1", "of", "size", "<NUM>", "from", "<IP>"}));

  line.text = "3 WARN moved 0xdeadbeef to /var/log/a.txt id 123e4567-e89b-12d3-a456-426614174000";
  CHECK(preprocess_line(line, prof.drain) == toks({"moved", "<HEX>", "to", "<PATH>", "id", "<UUID>"}));
}

TEST_CASE("preprocess agrees with the sequential regex oracle on the 20-line corpus") {
  const auto prof = profile("synthetic");
  for (const auto& line : load("data/drain20.log")) {
    CHECK(preprocess_line(line, prof.drain) ==
          oracle::preprocess(line.text, prof.drain.header_pattern, masks_of(prof.drain)));
  }
}

TEST_CASE("a line with nothing left after masking is degenerate") {
  DrainConfig c;
  c.masking_rules.emplace_back(R"(.*)", "");
  try {
    preprocess_line({"s", 4, "anything"}, c);
    FAIL("expected DegenerateLine");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateLine);
  }
}

TEST_CASE("similarity counts wildcards as matches") {
  LogTemplate t{0, {TemplateToken::literal("a"), TemplateToken::any(), TemplateToken::literal("c")}, 1};
  CHECK(DrainParser::similarity(t, toks({"a", "x", "c"})) == 1.0);
  CHECK(DrainParser::similarity(t, toks({"a", "x", "d"})) == doctest::Approx(2.0 / 3.0));
  CHECK(DrainParser::similarity(t, toks({"a", "x"})) == 0.0);
}

TEST_CASE("identical lines map to one template; threshold 1.0 splits any difference") {
  DrainParser p{DrainConfig{}};
  const auto a = toks({"open", "file", "x", "ok"});
  CHECK(p.parse_line(a) == p.parse_line(a));
  CHECK(p.store().size() == 1);
  CHECK(p.store().at(0).match_count == 2);

  DrainConfig strict;
  strict.similarity_threshold = 1.0;
  DrainParser q{strict};
  q.parse_line(toks({"open", "file", "x", "ok"}));
  q.parse_line(toks({"open", "file", "y", "ok"}));
  CHECK(q.store().size() == 2);
}

TEST_CASE("differing tokens are generalized to wildcards") {
  DrainParser p{DrainConfig{}};
  p.parse_line(toks({"session", "opened", "for", "alice"}));
  const auto id = p.parse_line(toks({"session", "opened", "for", "bob"}));
  CHECK(p.store().at(id).text() == "session opened for <*>");
  const auto ev = p.parse_event(toks({"session", "opened", "for", "carol"}));
  CHECK(ev.template_id == id);
  CHECK(ev.parameters == toks({"carol"}));
}

TEST_CASE("lines of different length never share a template") {
  DrainParser p{DrainConfig{}};
  const auto a = p.parse_line(toks({"a", "b", "c"}));
  const auto b = p.parse_line(toks({"a", "b", "c", "d"}));
  CHECK(a != b);
}

TEST_CASE("tokens with digits route through the wildcard child") {
  DrainParser p{DrainConfig{}};
  const auto a = p.parse_line(toks({"node1", "up", "now", "ok"}));
  const auto b = p.parse_line(toks({"node2", "up", "now", "ok"}));
  CHECK(a == b);
  CHECK(p.store().at(a).text() == "<*> up now ok");
}

TEST_CASE("a full node sends new tokens to the overflow child") {
  DrainConfig c;
  c.max_children = 2;
  DrainParser p{c};
  const auto a = p.parse_line(toks({"alpha", "x", "y", "z"}));
  const auto b = p.parse_line(toks({"beta", "x", "y", "z"}));
  const auto g = p.parse_line(toks({"gamma", "x", "y", "z"}));
  const auto d = p.parse_line(toks({"delta", "x", "y", "z"}));
  CHECK(a != b);
  CHECK(g == d);  // both went to the overflow child and merged there
  CHECK(p.store().at(g).text() == "<*> x y z");
}

TEST_CASE("ties go to the lowest template id") {
  DrainConfig c;
  c.tree_depth = 2;  // no prefix routing: every same-length line shares one leaf
  c.similarity_threshold = 0.5;
  DrainParser p{c};
  const auto a = p.parse_line(toks({"a", "b", "x", "y"}));
  const auto b = p.parse_line(toks({"c", "d", "x", "y2"}));
  REQUIRE(a != b);  // similarity 1/4 below threshold
  // 2/4 against each
  CHECK(p.parse_line(toks({"a", "b", "q", "y2"})) == std::min(a, b));
}

TEST_CASE("invalid config is rejected") {
  DrainConfig c;
  c.similarity_threshold = 0.0;
  CHECK_THROWS_AS(DrainParser{c}, Error);
  c = DrainConfig{};
  c.tree_depth = 1;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("frozen store rejects further parsing") {
  DrainParser p{DrainConfig{}};
  p.parse_line(toks({"a"}));
  auto store = p.release();
  CHECK(store.frozen());
  CHECK_THROWS_AS(store.add({TemplateToken::literal("b")}, 1), Error);
}

TEST_CASE("template partition equals the brute-force Drain oracle on the 20-line corpus") {
  const auto prof = profile("synthetic");
  const auto lines = load("data/drain20.log");
  auto parsed = parse_corpus(lines, prof.drain, prof.sessions);
  REQUIRE(parsed.events.size() == 20);

  std::vector<std::vector<std::string>> tokens;
  for (const auto& l : lines)
    tokens.push_back(oracle::preprocess(l.text, prof.drain.header_pattern, masks_of(prof.drain)));
  const auto ref = oracle::drain(tokens, prof.drain.tree_depth, prof.drain.similarity_threshold);

  std::vector<int> got;
  for (const auto& ev : parsed.events) got.push_back(ev.event.template_id);
  CHECK(oracle::partition(got) == oracle::partition(ref.assignment));

  std::multiset<std::string> ours, theirs;
  for (const auto& t : parsed.store.templates()) ours.insert(t.text());
  for (const auto& t : ref.templates) {
    std::string s;
    for (const auto& w : t.tokens) s += (s.empty() ? "" : " ") + w;
    theirs.insert(s);
  }
  CHECK(ours == theirs);
  CHECK(parsed.store.total_matches() == 20);
}

TEST_CASE("the 20-line corpus has the expected templates") {
  const auto prof = profile("synthetic");
  auto parsed = parse_corpus(load("data/drain20.log"), prof.drain, prof.sessions);
  std::set<std::string> texts;
  for (const auto& t : parsed.store.templates()) texts.insert(t.text());
  CHECK(texts.count("Receiving block <*> from <IP>"));
  CHECK(texts.count("Starting thread pool with <NUM> workers"));
  CHECK(texts.count("Verification succeeded for <*>"));
  // second token differs, so these live under different routes
  CHECK(texts.count("Connection refused by peer node7"));
  CHECK(texts.count("Connection reset by peer node8"));
}

TEST_CASE("session grouping equals the rescanning oracle on the 20-line corpus") {
  const auto prof = profile("synthetic");
  const auto lines = load("data/drain20.log");
  auto parsed = parse_corpus(lines, prof.drain, prof.sessions);
  std::vector<std::string> text;
  for (const auto& l : lines) text.push_back(l.text);
  const auto ref = oracle::group_by_key(text, R"(sess_\d+)");

  const auto& g = parsed.grouped;
  REQUIRE(g.sessions.size() == ref.size());
  for (std::size_t s = 0; s < ref.size(); ++s) {
    CHECK(g.sessions[s].session_key == ref[s].first);
    CHECK(g.members[s] == ref[s].second);
    std::vector<TemplateId> ids;
    for (auto i : ref[s].second) ids.push_back(parsed.events[i].event.template_id);
    CHECK(g.sessions[s].event_ids == ids);
    CHECK(g.sessions[s].label == Label::Unlabeled);
  }
  CHECK(g.dropped_lines == 0);
}

TEST_CASE("fixed-count grouping") {
  std::vector<LineEvent> events;
  for (std::uint64_t i = 0; i < 7; ++i) events.push_back({{"s", i + 1, "x"}, {static_cast<TemplateId>(i), {}}});
  SessionSpec spec{FixedCount{3}, "s"};
  const auto g = group_sessions(events, spec);
  REQUIRE(g.sessions.size() == 3);
  CHECK(g.sessions[0].event_ids == std::vector<TemplateId>{0, 1, 2});
  CHECK(g.sessions[2].event_ids == std::vector<TemplateId>{6});
}

TEST_CASE("time windows match the enumerating oracle on a 50-line sample") {
  Rng rng(99);
  std::vector<LineEvent> events;
  std::vector<double> stamps;
  for (std::uint64_t i = 0; i < 50; ++i) {
    // mostly increasing with some jitter backwards
    const double t = 1000.0 + static_cast<double>(i) * 7.0 + uniform(rng, -10.0, 10.0);
    const double rounded = std::round(t * 10.0) / 10.0;
    stamps.push_back(rounded);
    std::ostringstream text;
    text << "host " << rounded << " event";
    events.push_back({{"s", i + 1, text.str()}, {static_cast<TemplateId>(i % 5), {}}});
  }
  for (auto [seconds, stride] : {std::pair{60.0, 60.0}, {60.0, 30.0}, {25.0, 10.0}}) {
    SessionSpec spec{TimeWindow{seconds, stride}, "s"};
    const auto g = group_sessions(events, spec);
    const auto ref = oracle::windows(stamps, seconds, stride);
    REQUIRE(g.members.size() == ref.size());
    for (std::size_t w = 0; w < ref.size(); ++w) CHECK(g.members[w] == ref[w]);
  }
}

TEST_CASE("key grouping that matches nothing is an empty-input error") {
  std::vector<LineEvent> events{{{"s", 1, "no key here"}, {0, {}}}};
  try {
    group_sessions(events, SessionSpec{KeyRegex{R"(blk_\d+)"}, "s"});
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyInput);
  }
}

TEST_CASE("invalid session specs") {
  CHECK_THROWS_AS((SessionSpec{FixedCount{0}, "s"}.validate()), Error);
  CHECK_THROWS_AS((SessionSpec{TimeWindow{10, 20}, "s"}.validate()), Error);
  CHECK_THROWS_AS((SessionSpec{KeyRegex{""}, "s"}.validate()), Error);
}

TEST_CASE("templates and sessions round-trip through their text formats") {
  const auto prof = profile("synthetic");
  auto parsed = parse_corpus(load("data/drain20.log"), prof.drain, prof.sessions);
  std::stringstream ts;
  write_templates(ts, parsed.store);
  const auto store = read_templates(ts);
  REQUIRE(store.size() == parsed.store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto id = static_cast<TemplateId>(i);
    CHECK(store.at(id).tokens == parsed.store.at(id).tokens);
  }

  auto sessions = parsed.grouped.sessions;
  sessions[0].label = Label::Anomalous;
  sessions[1].label = Label::Normal;
  std::stringstream ss;
  write_sessions(ss, sessions);
  CHECK(read_sessions(ss) == sessions);
}

TEST_CASE("profiles") {
  for (const char* name : {"hdfs", "bgl", "openstack", "synthetic", "plain"}) {
    const auto p = profile(name);
    CHECK_NOTHROW(p.drain.validate());
    CHECK_NOTHROW(p.sessions.validate());
  }
  CHECK(std::get<FixedCount>(profile("bgl").sessions.strategy).n == 60);
  CHECK_THROWS_AS(profile("nope"), Error);

  const auto hdfs = profile("hdfs");
  RawLogLine l{"hdfs", 1,
               "081109 203615 148 INFO dfs.DataNode$PacketResponder: PacketResponder 1 for block "
               "blk_38865049064139660 terminating"};
  CHECK(preprocess_line(l, hdfs.drain) == toks({"PacketResponder", "<NUM>", "for", "block", "<ID>", "terminating"}));
}
