#pragma once

// GRU feature extractor with additive attention pooling, anomaly head and
// domain head, with the two losses and exact reverse-mode gradients.
//
// Parameter groups are flat vectors; the layout inside each group is fixed:
//
//   theta_e:     W_x (3H x D) | W_h (3H x H) | b_x (3H) | b_h (3H) | W_a (A x H) | v_a (A)
//   theta_omega: W_1 (K x H) | b_1 (K) | w_2 (K) | b_2 (1)
//   theta_d:     same layout as theta_omega
//
// Matrices are column-major. Gate rows of the GRU blocks are ordered
// reset, update, candidate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zerolog/error.hpp"
#include "zerolog/rng.hpp"

namespace zerolog::nn {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kProbEpsilon = 1e-7;

struct NetworkConfig {
  Eigen::Index input_dim = 300;
  Eigen::Index hidden_dim = 128;
  Eigen::Index attention_dim = 64;
  Eigen::Index head_hidden_dim = 64;

  void validate() const {
    if (input_dim < 1 || hidden_dim < 1 || attention_dim < 1 || head_hidden_dim < 1)
      throw Error(ErrorKind::Config, "network dimensions must be >= 1");
  }

  Eigen::Index extractor_size() const {
    const auto h3 = 3 * hidden_dim;
    return h3 * input_dim + h3 * hidden_dim + 2 * h3 + attention_dim * hidden_dim + attention_dim;
  }
  Eigen::Index head_size() const { return head_hidden_dim * hidden_dim + 2 * head_hidden_dim + 1; }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

enum class Group { Extractor, AnomalyHead, DomainHead };

inline const char* group_name(Group g) {
  switch (g) {
    case Group::Extractor: return "theta_e";
    case Group::AnomalyHead: return "theta_omega";
    case Group::DomainHead: return "theta_d";
  }
  return "?";
}

template <typename Scalar>
struct NetworkParams {
  Vec<Scalar> theta_e;
  Vec<Scalar> theta_omega;
  Vec<Scalar> theta_d;

  Vec<Scalar>& group(Group g) {
    return g == Group::Extractor ? theta_e : g == Group::AnomalyHead ? theta_omega : theta_d;
  }
  const Vec<Scalar>& group(Group g) const {
    return g == Group::Extractor ? theta_e : g == Group::AnomalyHead ? theta_omega : theta_d;
  }

  static NetworkParams zeros(const NetworkConfig& c) {
    return {Vec<Scalar>::Zero(c.extractor_size()), Vec<Scalar>::Zero(c.head_size()),
            Vec<Scalar>::Zero(c.head_size())};
  }

  template <typename To>
  NetworkParams<To> cast() const {
    return {theta_e.template cast<To>(), theta_omega.template cast<To>(),
            theta_d.template cast<To>()};
  }

  bool all_finite() const {
    return theta_e.allFinite() && theta_omega.allFinite() && theta_d.allFinite();
  }

  friend bool operator==(const NetworkParams& a, const NetworkParams& b) {
    return a.theta_e == b.theta_e && a.theta_omega == b.theta_omega && a.theta_d == b.theta_d;
  }
};

// ---------------------------------------------------------------------------
// Views over the flat groups

template <typename Ptr, typename Scalar>
struct ExtractorViewT {
  using MatMap = Eigen::Map<std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>,
                                               const Mat<Scalar>, Mat<Scalar>>>;
  using VecMap = Eigen::Map<std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>,
                                               const Vec<Scalar>, Vec<Scalar>>>;

  ExtractorViewT(const NetworkConfig& c, Ptr p)
      : W_x(p, 3 * c.hidden_dim, c.input_dim),
        W_h(p += 3 * c.hidden_dim * c.input_dim, 3 * c.hidden_dim, c.hidden_dim),
        b_x(p += 3 * c.hidden_dim * c.hidden_dim, 3 * c.hidden_dim),
        b_h(p += 3 * c.hidden_dim, 3 * c.hidden_dim),
        W_a(p += 3 * c.hidden_dim, c.attention_dim, c.hidden_dim),
        v_a(p += c.attention_dim * c.hidden_dim, c.attention_dim) {}

  MatMap W_x, W_h;
  VecMap b_x, b_h;
  MatMap W_a;
  VecMap v_a;
};

template <typename Ptr, typename Scalar>
struct HeadViewT {
  using MatMap = Eigen::Map<std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>,
                                               const Mat<Scalar>, Mat<Scalar>>>;
  using VecMap = Eigen::Map<std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>,
                                               const Vec<Scalar>, Vec<Scalar>>>;

  HeadViewT(const NetworkConfig& c, Ptr p)
      : W_1(p, c.head_hidden_dim, c.hidden_dim),
        b_1(p += c.head_hidden_dim * c.hidden_dim, c.head_hidden_dim),
        w_2(p += c.head_hidden_dim, c.head_hidden_dim),
        b_2(*(p + c.head_hidden_dim)) {}

  MatMap W_1;
  VecMap b_1, w_2;
  std::remove_pointer_t<Ptr>& b_2;
};

template <typename Scalar>
using ExtractorView = ExtractorViewT<const Scalar*, Scalar>;
template <typename Scalar>
using ExtractorGrad = ExtractorViewT<Scalar*, Scalar>;
template <typename Scalar>
using HeadView = HeadViewT<const Scalar*, Scalar>;
template <typename Scalar>
using HeadGrad = HeadViewT<Scalar*, Scalar>;

/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight matrix, zero
/// biases. Deterministic in (config, seed).
template <typename Scalar>
NetworkParams<Scalar> init_params(const NetworkConfig& c, std::uint64_t seed) {
  c.validate();
  auto p = NetworkParams<Scalar>::zeros(c);
  Rng rng(seed);
  auto fill = [&](auto&& m, Eigen::Index fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        m(i, j) = static_cast<Scalar>(uniform(rng, -bound, bound));
  };
  ExtractorGrad<Scalar> e(c, p.theta_e.data());
  fill(e.W_x, c.input_dim);
  fill(e.W_h, c.hidden_dim);
  fill(e.W_a, c.hidden_dim);
  fill(e.v_a, c.attention_dim);
  for (auto* head : {&p.theta_omega, &p.theta_d}) {
    HeadGrad<Scalar> h(c, head->data());
    fill(h.W_1, c.hidden_dim);
    fill(h.w_2, c.head_hidden_dim);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Forward

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return x >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-x))
                : std::exp(x) / (Scalar(1) + std::exp(x));
}

template <typename Scalar>
Scalar clamp_prob(Scalar p) {
  return std::clamp(p, Scalar(kProbEpsilon), Scalar(1.0 - kProbEpsilon));
}

template <typename Scalar>
struct ForwardTrace {
  Mat<Scalar> hidden;      // H x n, H_1..H_n
  Mat<Scalar> reset;       // H x n
  Mat<Scalar> update;      // H x n
  Mat<Scalar> candidate;   // H x n
  Mat<Scalar> hn_linear;   // H x n, W_hn H_{t-1} + b_hn
  Mat<Scalar> attn_hidden; // A x n, tanh(W_a H_t)
  Vec<Scalar> scores;      // n
  Vec<Scalar> weights;     // n, softmax(scores)
  Vec<Scalar> feature;     // H
};

template <typename Scalar>
struct HeadTrace {
  Vec<Scalar> hidden;  // tanh(W_1 f + b_1)
  Scalar logit{};
  Scalar prob{};       // clamped
  bool clamped = false;
};

/// Input projections W_x e + b_x for every column of `inputs`. Shared by all
/// sequences that index into the same embedding matrix.
template <typename Scalar, typename Derived>
Mat<Scalar> project_inputs(const NetworkConfig& c, const Vec<Scalar>& theta_e,
                           const Eigen::MatrixBase<Derived>& inputs) {
  ExtractorView<Scalar> e(c, theta_e.data());
  Mat<Scalar> proj = e.W_x * inputs;
  proj.colwise() += e.b_x;
  return proj;
}

/// Runs the GRU over the columns `steps` of `projected` (output of
/// project_inputs) and pools H_1..H_n with additive attention.
template <typename Scalar>
ForwardTrace<Scalar> extract(const NetworkConfig& c, const Vec<Scalar>& theta_e,
                             const Mat<Scalar>& projected, std::span<const int> steps) {
  if (steps.empty()) throw Error(ErrorKind::EmptyInput, "feature_extract: empty sequence");
  ExtractorView<Scalar> e(c, theta_e.data());
  const Eigen::Index H = c.hidden_dim;
  const Eigen::Index n = static_cast<Eigen::Index>(steps.size());

  ForwardTrace<Scalar> tr;
  tr.hidden.resize(H, n);
  tr.reset.resize(H, n);
  tr.update.resize(H, n);
  tr.candidate.resize(H, n);
  tr.hn_linear.resize(H, n);

  Vec<Scalar> h = Vec<Scalar>::Zero(H);
  Vec<Scalar> gh(3 * H);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto x = projected.col(steps[static_cast<std::size_t>(t)]);
    gh.noalias() = e.W_h * h;
    gh += e.b_h;
    for (Eigen::Index i = 0; i < H; ++i) {
      const Scalar r = sigmoid(x[i] + gh[i]);
      const Scalar z = sigmoid(x[H + i] + gh[H + i]);
      const Scalar cand = std::tanh(x[2 * H + i] + r * gh[2 * H + i]);
      tr.reset(i, t) = r;
      tr.update(i, t) = z;
      tr.candidate(i, t) = cand;
      tr.hn_linear(i, t) = gh[2 * H + i];
      h[i] = (Scalar(1) - z) * cand + z * h[i];
    }
    tr.hidden.col(t) = h;
  }

  tr.attn_hidden = (e.W_a * tr.hidden).array().tanh().matrix();
  tr.scores = (e.v_a.transpose() * tr.attn_hidden).transpose();
  const Scalar top = tr.scores.maxCoeff();
  tr.weights = (tr.scores.array() - top).exp().matrix();
  tr.weights /= tr.weights.sum();
  tr.feature = tr.hidden * tr.weights;
  return tr;
}

/// Convenience form over explicit event vectors V_e1..V_en.
template <typename Scalar>
ForwardTrace<Scalar> feature_extract(const NetworkConfig& c, const Vec<Scalar>& theta_e,
                                     std::span<const Vec<Scalar>> sequence) {
  if (sequence.empty()) throw Error(ErrorKind::EmptyInput, "feature_extract: empty sequence");
  Mat<Scalar> inputs(c.input_dim, static_cast<Eigen::Index>(sequence.size()));
  std::vector<int> steps(sequence.size());
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    if (sequence[t].size() != c.input_dim)
      throw Error(ErrorKind::Input, "feature_extract: input vector has wrong dimension");
    inputs.col(static_cast<Eigen::Index>(t)) = sequence[t];
    steps[t] = static_cast<int>(t);
  }
  return extract(c, theta_e, project_inputs(c, theta_e, inputs), steps);
}

/// affine -> tanh -> affine -> sigmoid, clamped to [eps, 1 - eps].
template <typename Scalar>
HeadTrace<Scalar> head_forward(const NetworkConfig& c, const Vec<Scalar>& theta,
                               const Vec<Scalar>& feature) {
  if (feature.size() != c.hidden_dim)
    throw Error(ErrorKind::Input, "classifier: feature has wrong dimension");
  HeadView<Scalar> h(c, theta.data());
  HeadTrace<Scalar> tr;
  tr.hidden = (h.W_1 * feature + h.b_1).array().tanh().matrix();
  tr.logit = h.w_2.dot(tr.hidden) + h.b_2;
  const Scalar raw = sigmoid(tr.logit);
  tr.prob = clamp_prob(raw);
  tr.clamped = tr.prob != raw;
  return tr;
}

template <typename Scalar>
Scalar classify_anomaly(const NetworkConfig& c, const Vec<Scalar>& theta_omega,
                        const Vec<Scalar>& feature) {
  return head_forward(c, theta_omega, feature).prob;
}

template <typename Scalar>
Scalar classify_domain(const NetworkConfig& c, const Vec<Scalar>& theta_d,
                       const Vec<Scalar>& feature) {
  return head_forward(c, theta_d, feature).prob;
}

// ---------------------------------------------------------------------------
// Losses

/// Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps].
template <typename Scalar>
Scalar loss_c(std::span<const Scalar> probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) throw Error(ErrorKind::Input, "loss_c: arity mismatch");
  if (probs.empty()) return Scalar(0);
  Scalar sum = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const Scalar p = clamp_prob(probs[i]);
    sum -= labels[i] ? std::log(p) : std::log(Scalar(1) - p);
  }
  return sum / static_cast<Scalar>(probs.size());
}

/// mean(log d_s) + mean(log(1 - d_t)); an empty side contributes 0.
template <typename Scalar>
Scalar loss_ad(std::span<const Scalar> source, std::span<const Scalar> target) {
  Scalar s = 0, t = 0;
  for (Scalar d : source) s += std::log(clamp_prob(d));
  for (Scalar d : target) t += std::log(Scalar(1) - clamp_prob(d));
  if (!source.empty()) s /= static_cast<Scalar>(source.size());
  if (!target.empty()) t /= static_cast<Scalar>(target.size());
  return s + t;
}

template <typename Scalar>
struct LossBundle {
  Scalar l_c{};
  Scalar l_ad{};
  Scalar l_task{};
};

enum class Loss { Classification, Adversarial, Task };

/// gamma * L_c + beta * L_ad for Loss::Task; the plain loss otherwise.
struct TaskWeights {
  double gamma = 2.5;
  double beta = 2.0;
};

/// Sequences index columns of `inputs` (input_dim x templates). Target
/// sequences carry no labels.
template <typename Scalar>
struct Batch {
  const Mat<Scalar>* inputs = nullptr;
  std::vector<std::span<const int>> source;
  std::vector<int> source_labels;
  std::vector<std::span<const int>> target;

  bool empty() const { return source.empty() && target.empty(); }
};

struct GroupMask {
  bool extractor = false;
  bool anomaly = false;
  bool domain = false;

  static GroupMask all() { return {true, true, true}; }
  static GroupMask only(Group g) {
    return {g == Group::Extractor, g == Group::AnomalyHead, g == Group::DomainHead};
  }
};

template <typename Scalar>
struct Evaluation {
  LossBundle<Scalar> losses;
  NetworkParams<Scalar> grads;  // groups outside the mask are zero
  std::vector<Scalar> anomaly_probs;  // per source sequence
  std::vector<Scalar> domain_source;  // per source sequence
  std::vector<Scalar> domain_target;  // per target sequence
};

namespace detail {

template <typename Scalar>
void head_backward(const NetworkConfig& c, const Vec<Scalar>& theta, const HeadTrace<Scalar>& tr,
                   const Vec<Scalar>& feature, Scalar dlogit, Vec<Scalar>* grad,
                   Vec<Scalar>* dfeature) {
  HeadView<Scalar> h(c, theta.data());
  const Vec<Scalar> dpre =
      (dlogit * h.w_2.array() * (Scalar(1) - tr.hidden.array().square())).matrix();
  if (grad) {
    HeadGrad<Scalar> g(c, grad->data());
    g.W_1.noalias() += dpre * feature.transpose();
    g.b_1 += dpre;
    g.w_2 += dlogit * tr.hidden;
    g.b_2 += dlogit;
  }
  if (dfeature) dfeature->noalias() += h.W_1.transpose() * dpre;
}

/// Gradient w.r.t. softmax inputs given the softmax output and the gradient
/// w.r.t. that output. Always orthogonal to the all-ones direction.
template <typename Scalar>
Vec<Scalar> softmax_backward(const Vec<Scalar>& weights, const Vec<Scalar>& dweights) {
  const Scalar mean = weights.dot(dweights);
  return (weights.array() * (dweights.array() - mean)).matrix();
}

/// Backpropagates d(loss)/d(feature) through attention and the GRU.
/// Accumulates into the extractor gradient and into `dprojected` (gradient
/// w.r.t. the projected inputs, columns indexed like `projected`).
template <typename Scalar>
void extract_backward(const NetworkConfig& c, const Vec<Scalar>& theta_e,
                      const ForwardTrace<Scalar>& tr, std::span<const int> steps,
                      const Vec<Scalar>& dfeature, Vec<Scalar>& grad, Mat<Scalar>& dprojected) {
  ExtractorView<Scalar> e(c, theta_e.data());
  ExtractorGrad<Scalar> g(c, grad.data());
  const Eigen::Index H = c.hidden_dim;
  const Eigen::Index n = tr.hidden.cols();

  // feature = hidden * weights
  Mat<Scalar> dhidden = dfeature * tr.weights.transpose();
  const Vec<Scalar> dscores = softmax_backward<Scalar>(tr.weights, tr.hidden.transpose() * dfeature);
  // scores = v_a^T tanh(W_a hidden)
  g.v_a.noalias() += tr.attn_hidden * dscores;
  const Mat<Scalar> dpre =
      ((e.v_a * dscores.transpose()).array() * (Scalar(1) - tr.attn_hidden.array().square()))
          .matrix();
  g.W_a.noalias() += dpre * tr.hidden.transpose();
  dhidden.noalias() += e.W_a.transpose() * dpre;

  Vec<Scalar> dh = Vec<Scalar>::Zero(H);
  Vec<Scalar> dgh(3 * H);
  Vec<Scalar> h_prev(H);
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    dh += dhidden.col(t);
    if (t > 0) h_prev = tr.hidden.col(t - 1);
    else h_prev.setZero();
    auto dx = dprojected.col(steps[static_cast<std::size_t>(t)]);
    for (Eigen::Index i = 0; i < H; ++i) {
      const Scalar r = tr.reset(i, t), z = tr.update(i, t), cand = tr.candidate(i, t);
      const Scalar dcand = dh[i] * (Scalar(1) - z);
      const Scalar dz = dh[i] * (h_prev[i] - cand);
      const Scalar dcand_pre = dcand * (Scalar(1) - cand * cand);
      const Scalar dr = dcand_pre * tr.hn_linear(i, t);
      const Scalar dr_pre = dr * r * (Scalar(1) - r);
      const Scalar dz_pre = dz * z * (Scalar(1) - z);
      dx[i] += dr_pre;
      dx[H + i] += dz_pre;
      dx[2 * H + i] += dcand_pre;
      dgh[i] = dr_pre;
      dgh[H + i] = dz_pre;
      dgh[2 * H + i] = dcand_pre * r;
      dh[i] *= z;
    }
    g.W_h.noalias() += dgh * h_prev.transpose();
    g.b_h += dgh;
    dh.noalias() += e.W_h.transpose() * dgh;
  }
}

template <typename Scalar>
void check_finite(const NetworkConfig& c, const NetworkParams<Scalar>& grads) {
  if (!grads.theta_e.allFinite()) {
    ExtractorView<Scalar> g(c, grads.theta_e.data());
    const char* where = !g.W_x.allFinite() || !g.b_x.allFinite()  ? "theta_e.input"
                        : !g.W_h.allFinite() || !g.b_h.allFinite() ? "theta_e.recurrent"
                                                                   : "theta_e.attention";
    throw NumericError(where, std::string("non-finite gradient in ") + where);
  }
  if (!grads.theta_omega.allFinite())
    throw NumericError("theta_omega", "non-finite gradient in theta_omega");
  if (!grads.theta_d.allFinite()) throw NumericError("theta_d", "non-finite gradient in theta_d");
}

}  // namespace detail

/// Forward pass over the batch plus reverse-mode gradients of the selected
/// loss for the groups in `mask`. Groups not on the loss path come back as
/// exact zeros.
template <typename Scalar>
Evaluation<Scalar> evaluate(const NetworkConfig& c, const NetworkParams<Scalar>& params,
                            const Batch<Scalar>& batch, Loss loss, GroupMask mask,
                            TaskWeights weights = {}) {
  if (batch.empty()) throw Error(ErrorKind::EmptyInput, "evaluate: empty batch");
  if (batch.source.size() != batch.source_labels.size())
    throw Error(ErrorKind::Input, "evaluate: labels do not match source sequences");
  if (batch.inputs == nullptr || batch.inputs->rows() != c.input_dim)
    throw Error(ErrorKind::Input, "evaluate: inputs missing or of wrong dimension");

  const Scalar w_c = loss == Loss::Classification ? Scalar(1)
                     : loss == Loss::Task         ? Scalar(weights.gamma)
                                                  : Scalar(0);
  const Scalar w_ad = loss == Loss::Adversarial ? Scalar(1)
                      : loss == Loss::Task      ? Scalar(weights.beta)
                                                : Scalar(0);

  const Mat<Scalar> projected = project_inputs(c, params.theta_e, *batch.inputs);
  Evaluation<Scalar> ev;
  ev.grads = NetworkParams<Scalar>::zeros(c);
  Mat<Scalar> dprojected;
  if (mask.extractor) dprojected = Mat<Scalar>::Zero(projected.rows(), projected.cols());

  const auto n_s = static_cast<Scalar>(batch.source.size());
  const auto n_t = static_cast<Scalar>(batch.target.size());
  Vec<Scalar> dfeature(c.hidden_dim);

  for (std::size_t i = 0; i < batch.source.size(); ++i) {
    const auto tr = extract(c, params.theta_e, projected, batch.source[i]);
    const auto a = head_forward(c, params.theta_omega, tr.feature);
    const auto d = head_forward(c, params.theta_d, tr.feature);
    ev.anomaly_probs.push_back(a.prob);
    ev.domain_source.push_back(d.prob);
    const int y = batch.source_labels[i];

    const Scalar da = (w_c == Scalar(0) || a.clamped) ? Scalar(0)
                                                       : w_c * (a.prob - Scalar(y)) / n_s;
    const Scalar dd = (w_ad == Scalar(0) || d.clamped) ? Scalar(0)
                                                        : w_ad * (Scalar(1) - d.prob) / n_s;
    dfeature.setZero();
    detail::head_backward(c, params.theta_omega, a, tr.feature, da,
                          mask.anomaly ? &ev.grads.theta_omega : nullptr,
                          mask.extractor ? &dfeature : nullptr);
    detail::head_backward(c, params.theta_d, d, tr.feature, dd,
                          mask.domain ? &ev.grads.theta_d : nullptr,
                          mask.extractor ? &dfeature : nullptr);
    if (mask.extractor && (da != Scalar(0) || dd != Scalar(0)))
      detail::extract_backward(c, params.theta_e, tr, batch.source[i], dfeature,
                               ev.grads.theta_e, dprojected);
  }
  for (std::size_t j = 0; j < batch.target.size(); ++j) {
    const auto tr = extract(c, params.theta_e, projected, batch.target[j]);
    const auto d = head_forward(c, params.theta_d, tr.feature);
    ev.domain_target.push_back(d.prob);
    const Scalar dd = (w_ad == Scalar(0) || d.clamped) ? Scalar(0) : -w_ad * d.prob / n_t;
    dfeature.setZero();
    detail::head_backward(c, params.theta_d, d, tr.feature, dd,
                          mask.domain ? &ev.grads.theta_d : nullptr,
                          mask.extractor ? &dfeature : nullptr);
    if (mask.extractor && dd != Scalar(0))
      detail::extract_backward(c, params.theta_e, tr, batch.target[j], dfeature,
                               ev.grads.theta_e, dprojected);
  }

  if (mask.extractor) {
    ExtractorGrad<Scalar> g(c, ev.grads.theta_e.data());
    g.W_x.noalias() += dprojected * batch.inputs->transpose();
    g.b_x += dprojected.rowwise().sum();
  }

  ev.losses.l_c = loss_c<Scalar>(ev.anomaly_probs, batch.source_labels);
  ev.losses.l_ad = loss_ad<Scalar>(ev.domain_source, ev.domain_target);
  ev.losses.l_task = Scalar(weights.gamma) * ev.losses.l_c + Scalar(weights.beta) * ev.losses.l_ad;
  detail::check_finite(c, ev.grads);
  return ev;
}

/// Gradient of one loss with respect to one parameter group.
template <typename Scalar>
Vec<Scalar> grad(const NetworkConfig& c, Loss loss, const Batch<Scalar>& batch,
                 const NetworkParams<Scalar>& params, Group group, TaskWeights weights = {}) {
  return evaluate(c, params, batch, loss, GroupMask::only(group), weights).grads.group(group);
}

/// Value of one loss (no gradients).
template <typename Scalar>
Scalar loss_value(const NetworkConfig& c, Loss loss, const Batch<Scalar>& batch,
                  const NetworkParams<Scalar>& params, TaskWeights weights = {}) {
  const auto ev = evaluate(c, params, batch, loss, GroupMask{}, weights);
  return loss == Loss::Classification ? ev.losses.l_c
         : loss == Loss::Adversarial  ? ev.losses.l_ad
                                      : ev.losses.l_task;
}

/// Anomaly probabilities for sequences indexing `inputs`.
template <typename Scalar>
std::vector<Scalar> anomaly_probabilities(const NetworkConfig& c,
                                          const NetworkParams<Scalar>& params,
                                          const Mat<Scalar>& inputs,
                                          std::span<const std::span<const int>> sequences) {
  const Mat<Scalar> projected = project_inputs(c, params.theta_e, inputs);
  std::vector<Scalar> out;
  out.reserve(sequences.size());
  for (const auto& seq : sequences) {
    const auto tr = extract(c, params.theta_e, projected, seq);
    out.push_back(head_forward(c, params.theta_omega, tr.feature).prob);
  }
  return out;
}

}  // namespace zerolog::nn
