#pragma once

// Training-facing corpora. Sequences are column indices into one shared
// embedding matrix (input_dim x templates).

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace zerolog {

using Sequence = std::vector<int>;

struct LabeledCorpus {
  std::vector<Sequence> sequences;
  std::vector<int> labels;  // 0 normal, 1 anomalous

  std::size_t size() const { return sequences.size(); }
  std::size_t anomalous() const {
    std::size_t n = 0;
    for (int y : labels) n += y != 0;
    return n;
  }
};

/// Target-domain sessions as the trainer sees them: there is no label field.
struct UnlabeledCorpus {
  std::vector<Sequence> sequences;

  std::size_t size() const { return sequences.size(); }
};

/// Evaluation-only labels of a target corpus. Every access is counted so
/// tests can prove training never touched them.
class GoldLabels {
 public:
  GoldLabels() = default;
  explicit GoldLabels(std::vector<int> labels) : labels_(std::move(labels)) {}

  const std::vector<int>& reveal() const {
    ++reads_;
    return labels_;
  }
  std::size_t size() const { return labels_.size(); }
  std::uint64_t reads() const { return reads_; }

 private:
  std::vector<int> labels_;
  mutable std::uint64_t reads_ = 0;
};

struct TrainingData {
  Eigen::MatrixXd inputs;  // input_dim x templates
  LabeledCorpus source;
  UnlabeledCorpus target;
};

}  // namespace zerolog
