#pragma once

// Brute-force references for the parser: sequential regex masking, Drain
// without a tree (every template remembers the route it was created under
// and candidates are found by scanning all templates), and key grouping by
// rescanning the whole corpus per key.

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Mask {
  std::string pattern, replacement;
};

inline std::vector<std::string> preprocess(std::string line, const std::string& header,
                                           const std::vector<Mask>& masks) {
  if (!header.empty()) {
    std::smatch m;
    if (std::regex_search(line, m, std::regex(header), std::regex_constants::match_continuous))
      line = line.substr(static_cast<std::size_t>(m.length(0)));
  }
  for (const auto& mk : masks) line = std::regex_replace(line, std::regex(mk.pattern), mk.replacement);
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

struct Template {
  std::vector<std::string> tokens;  // "<*>" = wildcard
  std::vector<bool> wild;
  std::vector<std::string> route;
};

struct DrainResult {
  std::vector<Template> templates;
  std::vector<int> assignment;  // template index per line
};

inline DrainResult drain(const std::vector<std::vector<std::string>>& lines, std::size_t depth, double threshold) {
  DrainResult r;
  for (const auto& toks : lines) {
    std::vector<std::string> route;
    route.push_back(std::to_string(toks.size()));
    for (std::size_t i = 0; i < std::min(depth - 2, toks.size()); ++i) {
      const bool digit = std::any_of(toks[i].begin(), toks[i].end(), [](unsigned char c) { return std::isdigit(c); });
      route.push_back(digit ? "<*>" : toks[i]);
    }
    int best = -1;
    double best_sim = -1;
    for (std::size_t t = 0; t < r.templates.size(); ++t) {
      const auto& tm = r.templates[t];
      if (tm.route != route) continue;
      std::size_t same = 0;
      for (std::size_t i = 0; i < toks.size(); ++i) same += tm.wild[i] || tm.tokens[i] == toks[i];
      const double sim = static_cast<double>(same) / static_cast<double>(toks.size());
      if (sim > best_sim) {
        best_sim = sim;
        best = static_cast<int>(t);
      }
    }
    if (best >= 0 && best_sim >= threshold) {
      auto& tm = r.templates[static_cast<std::size_t>(best)];
      for (std::size_t i = 0; i < toks.size(); ++i)
        if (!tm.wild[i] && tm.tokens[i] != toks[i]) {
          tm.wild[i] = true;
          tm.tokens[i] = "<*>";
        }
      r.assignment.push_back(best);
    } else {
      r.templates.push_back({toks, std::vector<bool>(toks.size(), false), route});
      r.assignment.push_back(static_cast<int>(r.templates.size() - 1));
    }
  }
  return r;
}

/// Line indices per template, as a sorted list of groups.
inline std::vector<std::vector<std::size_t>> partition(const std::vector<int>& assignment) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < assignment.size(); ++i) groups[assignment[i]].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [_, g] : groups) out.push_back(g);
  std::sort(out.begin(), out.end());
  return out;
}

/// (key, line indices) in first-seen key order.
inline std::vector<std::pair<std::string, std::vector<std::size_t>>> group_by_key(
    const std::vector<std::string>& lines, const std::string& pattern) {
  const std::regex re(pattern);
  std::vector<std::string> keys;
  for (const auto& l : lines) {
    std::smatch m;
    if (std::regex_search(l, m, re) && std::find(keys.begin(), keys.end(), m.str(0)) == keys.end())
      keys.push_back(m.str(0));
  }
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  for (const auto& k : keys) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::smatch m;
      if (std::regex_search(lines[i], m, re) && m.str(0) == k) members.push_back(i);
    }
    out.emplace_back(k, members);
  }
  return out;
}

/// Windows [t0 + k*stride, t0 + k*stride + seconds) enumerated one by one.
inline std::vector<std::vector<std::size_t>> windows(const std::vector<double>& stamps, double seconds,
                                                     double stride) {
  std::vector<std::vector<std::size_t>> out;
  if (stamps.empty()) return out;
  const double t0 = *std::min_element(stamps.begin(), stamps.end());
  const double last = *std::max_element(stamps.begin(), stamps.end());
  for (std::size_t k = 0; t0 + static_cast<double>(k) * stride <= last; ++k) {
    const double begin = t0 + static_cast<double>(k) * stride;
    std::vector<std::size_t> w;
    for (std::size_t i = 0; i < stamps.size(); ++i)
      if (stamps[i] >= begin && stamps[i] < begin + seconds) w.push_back(i);
    if (!w.empty()) out.push_back(w);
  }
  return out;
}

}  // namespace oracle
