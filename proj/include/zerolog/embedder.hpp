#pragma once

// Shared semantic space for log templates of every system: each template is
// embedded from the word vectors of its literal tokens against one table.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "zerolog/log_parser.hpp"

namespace zerolog::embed {

class WordVectorTable {
 public:
  explicit WordVectorTable(std::size_t dimension = 300) : dimension_(dimension) {}

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return tokens_.size(); }
  std::uint64_t skipped_rows() const { return skipped_rows_; }

  /// Replaces an existing entry. Throws Error(Input) on arity mismatch or
  /// non-finite components.
  void insert(std::string token, const Eigen::Ref<const Eigen::VectorXd>& vec);
  const Eigen::VectorXd* find(std::string_view token) const;

  /// Tokens in insertion order.
  std::span<const std::string> tokens() const { return tokens_; }

  void set_skipped_rows(std::uint64_t n) { skipped_rows_ = n; }

 private:
  std::size_t dimension_;
  std::vector<std::string> tokens_;
  std::vector<Eigen::VectorXd> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t skipped_rows_ = 0;
};

/// `token v1 ... v_dimension` per line. Malformed rows are skipped and
/// counted; zero valid rows -> Error(EmptyInput); arity mismatch on more than
/// half the rows -> Error(Format).
WordVectorTable load_word_vectors(const std::filesystem::path& path, std::size_t dimension);
WordVectorTable read_word_vectors(std::istream& in, std::size_t dimension);
void write_word_vectors(std::ostream& out, const WordVectorTable& table);

enum class Aggregation { Mean, TfIdfWeighted };
enum class OovPolicy { Zero, SeededHash };

struct EmbeddingConfig {
  Aggregation aggregation = Aggregation::Mean;
  OovPolicy oov_policy = OovPolicy::SeededHash;
  std::size_t dimension = 300;
  /// Lowercase and split camelCase / snake_case / punctuation.
  bool normalize_tokens = true;
  std::uint64_t oov_seed = 0x5EEDULL;
};

/// Word pieces of one literal token. Pure-digit pieces are dropped.
std::vector<std::string> normalize_token(std::string_view token, bool normalize = true);

/// Normalized words of all literal tokens of a template, in order.
std::vector<std::string> template_words(const parser::LogTemplate& tmpl, bool normalize = true);

/// Unit-norm vector derived only from (token, seed); identical on every
/// platform.
Eigen::VectorXd hashed_vector(std::string_view token, std::size_t dimension, std::uint64_t seed);

/// Smoothed inverse document frequency, one document per template:
/// idf(w) = ln((1 + N) / (1 + df(w))) + 1.
class IdfTable {
 public:
  static IdfTable from_templates(std::span<const parser::LogTemplate> templates,
                                 bool normalize = true);

  double operator()(std::string_view word) const;
  std::size_t documents() const { return documents_; }

 private:
  std::unordered_map<std::string, double> idf_;
  std::size_t documents_ = 0;
};

struct TemplateEmbedding {
  Eigen::VectorXd vector;
  /// Set when no word of the template had a table entry under the Zero policy
  /// (vector is then all zeros).
  bool all_oov = false;
  std::size_t oov_words = 0;
};

TemplateEmbedding embed_template(const parser::LogTemplate& tmpl, const WordVectorTable& table,
                                 const EmbeddingConfig& config, const IdfTable* idf = nullptr);

/// Embeddings for the union of several systems' templates. Keys are
/// `<system>:<template_id>`; columns of `matrix()` follow insertion order.
class GlobalEmbeddings {
 public:
  explicit GlobalEmbeddings(std::size_t dimension = 300) : dimension_(dimension) {}

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return keys_.size(); }
  Eigen::Map<const Eigen::MatrixXd> matrix() const {
    return {data_.data(), static_cast<Eigen::Index>(dimension_),
            static_cast<Eigen::Index>(keys_.size())};
  }
  std::span<const std::string> keys() const { return keys_; }
  std::uint64_t flagged() const { return flagged_; }

  std::optional<std::size_t> column(std::string_view system, parser::TemplateId id) const;
  std::optional<std::size_t> column(std::string_view key) const;

  /// Appends a column. Throws Error(Input) on duplicate key or wrong size.
  std::size_t add(std::string key, const Eigen::Ref<const Eigen::VectorXd>& vec);
  void add_flagged() { ++flagged_; }

  static std::string key(std::string_view system, parser::TemplateId id);

 private:
  std::size_t dimension_;
  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;  // column-major, dimension_ x size()
  std::uint64_t flagged_ = 0;
};

struct SystemTemplates {
  std::string system;
  const parser::TemplateStore* store = nullptr;
};

/// Every store must be frozen; table dimension must match config.dimension
/// (Error(Config) otherwise). `idf` is only read for TfIdfWeighted.
GlobalEmbeddings build_global_embeddings(std::span<const SystemTemplates> stores,
                                         const WordVectorTable& table,
                                         const EmbeddingConfig& config,
                                         const IdfTable* idf = nullptr);

/// `<system>:<template_id>\t<v1> ... <vD>`
void write_embeddings(std::ostream& out, const GlobalEmbeddings& embeddings);
GlobalEmbeddings read_embeddings(std::istream& in);

}  // namespace zerolog::embed
