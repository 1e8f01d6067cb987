#include "zerolog/embedder.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "zerolog/error.hpp"
#include "zerolog/rng.hpp"

namespace zerolog::embed {

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, end);
}

bool parse_double(std::string_view s, double& v) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_view(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// WordVectorTable

void WordVectorTable::insert(std::string token, const Eigen::Ref<const Eigen::VectorXd>& vec) {
  if (static_cast<std::size_t>(vec.size()) != dimension_)
    throw Error(ErrorKind::Input, "word vector for '" + token + "' has wrong dimension");
  if (!vec.allFinite()) throw Error(ErrorKind::Input, "word vector for '" + token + "' is not finite");
  if (auto it = index_.find(token); it != index_.end()) {
    vectors_[it->second] = vec;
    return;
  }
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
  vectors_.emplace_back(vec);
}

const Eigen::VectorXd* WordVectorTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? nullptr : &vectors_[it->second];
}

WordVectorTable read_word_vectors(std::istream& in, std::size_t dimension) {
  WordVectorTable table(dimension);
  std::uint64_t rows = 0, skipped = 0, arity_mismatch = 0;
  std::string line;
  Eigen::VectorXd vec(static_cast<Eigen::Index>(dimension));
  while (std::getline(in, line)) {
    const auto fields = split_view(line);
    if (fields.empty()) continue;
    ++rows;
    if (fields.size() != dimension + 1) {
      ++arity_mismatch;
      ++skipped;
      continue;
    }
    bool ok = true;
    for (std::size_t i = 0; i < dimension && ok; ++i) {
      double v;
      ok = parse_double(fields[i + 1], v) && std::isfinite(v);
      vec[static_cast<Eigen::Index>(i)] = v;
    }
    if (!ok) {
      ++skipped;
      continue;
    }
    table.insert(std::string(fields[0]), vec);
  }
  if (rows > 0 && 2 * arity_mismatch > rows)
    throw Error(ErrorKind::Format, "word vectors: more than half the rows have wrong arity");
  if (table.size() == 0) throw Error(ErrorKind::EmptyInput, "word vectors: no valid rows");
  table.set_skipped_rows(skipped);
  return table;
}

WordVectorTable load_word_vectors(const std::filesystem::path& path, std::size_t dimension) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cannot open word vectors " + path.string());
  return read_word_vectors(in, dimension);
}

void write_word_vectors(std::ostream& out, const WordVectorTable& table) {
  std::string line;
  for (const auto& tok : table.tokens()) {
    line = tok;
    for (double v : *table.find(tok)) {
      line.push_back(' ');
      append_number(line, v);
    }
    line.push_back('\n');
    out << line;
  }
}

// ---------------------------------------------------------------------------
// Tokens

std::vector<std::string> normalize_token(std::string_view token, bool normalize) {
  std::vector<std::string> out;
  if (!normalize) {
    out.emplace_back(token);
    return out;
  }
  auto flush = [&](std::string& piece) {
    if (piece.empty()) return;
    bool digits = true;
    for (unsigned char c : piece) digits = digits && std::isdigit(c);
    if (!digits) out.push_back(piece);
    piece.clear();
  };
  std::string piece;
  for (std::size_t i = 0; i < token.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(token[i]);
    if (!std::isalnum(c)) {
      flush(piece);
      continue;
    }
    if (!piece.empty()) {
      const unsigned char prev = static_cast<unsigned char>(token[i - 1]);
      const bool next_lower = i + 1 < token.size() &&
                              std::islower(static_cast<unsigned char>(token[i + 1]));
      const bool boundary =
          (std::isupper(c) && std::islower(prev)) ||                  // camelCase
          (std::isupper(c) && std::isupper(prev) && next_lower) ||    // HTTPServer
          (std::isdigit(c) != 0) != (std::isdigit(prev) != 0);       // abc123
      if (boundary) flush(piece);
    }
    piece.push_back(static_cast<char>(std::tolower(c)));
  }
  flush(piece);
  return out;
}

std::vector<std::string> template_words(const parser::LogTemplate& tmpl, bool normalize) {
  std::vector<std::string> words;
  for (const auto& tok : tmpl.tokens) {
    if (tok.wildcard) continue;
    for (auto& w : normalize_token(tok.text, normalize)) words.push_back(std::move(w));
  }
  return words;
}

Eigen::VectorXd hashed_vector(std::string_view token, std::size_t dimension, std::uint64_t seed) {
  std::uint64_t state = fnv1a64(token) ^ splitmix64(seed);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dimension));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
  }
  const double norm = v.norm();
  if (norm == 0.0) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / norm;
}

// ---------------------------------------------------------------------------
// Idf

IdfTable IdfTable::from_templates(std::span<const parser::LogTemplate> templates, bool normalize) {
  IdfTable t;
  t.documents_ = templates.size();
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& tmpl : templates) {
    const auto words = template_words(tmpl, normalize);
    std::unordered_set<std::string> seen(words.begin(), words.end());
    for (const auto& w : seen) ++df[w];
  }
  const double n = static_cast<double>(t.documents_);
  for (const auto& [w, count] : df) {
    t.idf_[w] = std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0;
  }
  return t;
}

double IdfTable::operator()(std::string_view word) const {
  if (auto it = idf_.find(std::string(word)); it != idf_.end()) return it->second;
  return std::log(1.0 + static_cast<double>(documents_)) + 1.0;
}

// ---------------------------------------------------------------------------
// Embedding

TemplateEmbedding embed_template(const parser::LogTemplate& tmpl, const WordVectorTable& table,
                                 const EmbeddingConfig& config, const IdfTable* idf) {
  if (table.dimension() != config.dimension)
    throw Error(ErrorKind::Config, "embedding dimension does not match word-vector table");
  if (config.aggregation == Aggregation::TfIdfWeighted && idf == nullptr)
    throw Error(ErrorKind::Config, "TfIdfWeighted aggregation needs an idf table");

  const auto dim = static_cast<Eigen::Index>(config.dimension);
  TemplateEmbedding out;
  out.vector = Eigen::VectorXd::Zero(dim);
  const auto words = template_words(tmpl, config.normalize_tokens);
  if (words.empty()) {
    out.all_oov = true;
    return out;
  }

  double weight_sum = 0.0;
  for (const auto& w : words) {
    const double weight =
        config.aggregation == Aggregation::TfIdfWeighted ? (*idf)(w) : 1.0;
    weight_sum += weight;
    if (const auto* vec = table.find(w)) {
      out.vector += weight * *vec;
      continue;
    }
    ++out.oov_words;
    if (config.oov_policy == OovPolicy::SeededHash)
      out.vector += weight * hashed_vector(w, config.dimension, config.oov_seed);
  }
  out.vector /= weight_sum;
  out.all_oov = out.oov_words == words.size() && config.oov_policy == OovPolicy::Zero;
  return out;
}

// ---------------------------------------------------------------------------
// GlobalEmbeddings

std::string GlobalEmbeddings::key(std::string_view system, parser::TemplateId id) {
  return std::string(system) + ":" + std::to_string(id);
}

std::optional<std::size_t> GlobalEmbeddings::column(std::string_view k) const {
  auto it = index_.find(std::string(k));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> GlobalEmbeddings::column(std::string_view system,
                                                    parser::TemplateId id) const {
  return column(key(system, id));
}

std::size_t GlobalEmbeddings::add(std::string k, const Eigen::Ref<const Eigen::VectorXd>& vec) {
  if (static_cast<std::size_t>(vec.size()) != dimension_)
    throw Error(ErrorKind::Input, "embedding '" + k + "' has wrong dimension");
  if (index_.contains(k)) throw Error(ErrorKind::Input, "duplicate embedding key '" + k + "'");
  const std::size_t col = keys_.size();
  index_.emplace(k, col);
  keys_.push_back(std::move(k));
  data_.insert(data_.end(), vec.data(), vec.data() + vec.size());
  return col;
}

GlobalEmbeddings build_global_embeddings(std::span<const SystemTemplates> stores,
                                         const WordVectorTable& table,
                                         const EmbeddingConfig& config, const IdfTable* idf) {
  if (table.dimension() != config.dimension)
    throw Error(ErrorKind::Config, "embedding dimension does not match word-vector table");
  GlobalEmbeddings out(config.dimension);
  for (const auto& sys : stores) {
    if (sys.store == nullptr || !sys.store->frozen())
      throw Error(ErrorKind::Config, "template store for '" + sys.system + "' is not frozen");
    for (const auto& tmpl : sys.store->templates()) {
      auto e = embed_template(tmpl, table, config, idf);
      if (e.all_oov) out.add_flagged();
      out.add(GlobalEmbeddings::key(sys.system, tmpl.template_id), e.vector);
    }
  }
  return out;
}

void write_embeddings(std::ostream& out, const GlobalEmbeddings& embeddings) {
  const auto m = embeddings.matrix();
  std::string line;
  for (std::size_t c = 0; c < embeddings.size(); ++c) {
    line = embeddings.keys()[c];
    line.push_back('\t');
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (r) line.push_back(' ');
      append_number(line, m(r, static_cast<Eigen::Index>(c)));
    }
    line.push_back('\n');
    out << line;
  }
}

GlobalEmbeddings read_embeddings(std::istream& in) {
  std::string line;
  std::optional<GlobalEmbeddings> out;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorKind::Format, "embeddings line " + std::to_string(no) + ": missing tab");
    const auto fields = split_view(std::string_view(line).substr(tab + 1));
    if (!out) out.emplace(fields.size());
    if (fields.size() != out->dimension() || fields.empty())
      throw Error(ErrorKind::Format, "embeddings line " + std::to_string(no) + ": wrong arity");
    Eigen::VectorXd v(static_cast<Eigen::Index>(fields.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_double(fields[i], v[static_cast<Eigen::Index>(i)]))
        throw Error(ErrorKind::Format, "embeddings line " + std::to_string(no) + ": bad number");
    }
    out->add(line.substr(0, tab), v);
  }
  if (!out) throw Error(ErrorKind::EmptyInput, "embeddings file is empty");
  return std::move(*out);
}

}  // namespace zerolog::embed
