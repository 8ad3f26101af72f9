#pragma once

#include <acnet/gnn/message_graph.hpp>
#include <acnet/link_task.hpp>

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace acnet::gnn {

enum class Aggregation : std::uint8_t { Sum = 0, Mean = 1, Min = 2, Max = 3 };
std::string_view to_string(Aggregation a) noexcept;
Aggregation parse_aggregation(std::string_view s);

struct ModelConfig {
  std::uint32_t dim{64};
  std::uint32_t hidden{64};
  Aggregation aggregation{Aggregation::Sum};
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Flat tensor layout shared by parameters, gradients and optimizer state.
///   embedding[type], year projection,
///   per layer: self[type], channel weight[c], channel bias[c],
///   decoder w1, b1, w2, b2.
namespace layout {
inline constexpr std::size_t kPerLayer = kNumNodeTypes + 2 * kNumChannels;
inline constexpr std::size_t kLayers = 2;
constexpr std::size_t embedding(NodeType t) noexcept { return to_index(t); }
inline constexpr std::size_t kYearProjection = kNumNodeTypes;
constexpr std::size_t self(std::size_t layer, NodeType t) noexcept {
  return kNumNodeTypes + 1 + layer * kPerLayer + to_index(t);
}
constexpr std::size_t weight(std::size_t layer, std::size_t c) noexcept {
  return kNumNodeTypes + 1 + layer * kPerLayer + kNumNodeTypes + c;
}
constexpr std::size_t bias(std::size_t layer, std::size_t c) noexcept {
  return kNumNodeTypes + 1 + layer * kPerLayer + kNumNodeTypes + kNumChannels + c;
}
inline constexpr std::size_t kDecoderW1 = kNumNodeTypes + 1 + kLayers * kPerLayer;
inline constexpr std::size_t kDecoderB1 = kDecoderW1 + 1;
inline constexpr std::size_t kDecoderW2 = kDecoderW1 + 2;
inline constexpr std::size_t kDecoderB2 = kDecoderW1 + 3;
inline constexpr std::size_t kTensorCount = kDecoderW1 + 4;

std::string tensor_name(std::size_t i);
}  // namespace layout

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Tensors = std::vector<Matrix<Scalar>>;

/// Per-type node representations.
template <typename Scalar>
using Representations = std::array<Matrix<Scalar>, kNumNodeTypes>;

/// Two heterogeneous SAGE-style convolutions followed by a two-layer pair decoder.
///
/// Layer rule for node v of type t:
///   h'_v = act(h_v W_self[t] + sum_c [N_c(v) non-empty] (AGG_{u in N_c(v)} h_u W_c + b_c))
/// with act = ReLU after layer 1 and identity after layer 2. Paper inputs are
/// their embedding row plus (scaled year) * year projection.
/// Decoder: sigmoid(relu([h_a, h_b] W1 + b1) W2 + b2) with a < b.
template <typename Scalar>
class Model {
 public:
  Model() = default;
  /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), embeddings ~ N(0, 1)/sqrt(dim),
  /// biases zero; each tensor draws from its own keyed stream.
  Model(const ModelConfig& config, const std::array<std::uint32_t, kNumNodeTypes>& counts, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  const std::array<std::uint32_t, kNumNodeTypes>& counts() const noexcept { return counts_; }
  Tensors<Scalar>& params() noexcept { return params_; }
  const Tensors<Scalar>& params() const noexcept { return params_; }

  /// Zero-filled tensors with the parameter shapes.
  Tensors<Scalar> zeros_like() const;

  /// Layer-2 representations; only types flagged in `outputs` are computed
  /// (other entries are left empty).
  Representations<Scalar> encode(const MessageGraph& g,
                                 std::array<bool, kNumNodeTypes> outputs = {true, true, true}) const;

  Scalar decode(const Matrix<Scalar>& author_repr, const AuthorPair& pair) const;

  /// Predicted probability for each pair.
  std::vector<Scalar> predict(const MessageGraph& g, std::span<const LabeledPair> batch) const;

  /// Mean binary cross-entropy over the batch. When `grad` is non-null it is
  /// overwritten with d(loss)/d(param) for every tensor. Min/Max route the
  /// gradient to the selected neighbour (lowest index on ties).
  Scalar loss_and_grad(const MessageGraph& g, std::span<const LabeledPair> batch, Tensors<Scalar>* grad) const;

  template <typename Other>
  Model<Other> cast() const {
    Model<Other> m;
    m.config_ = config_;
    m.counts_ = counts_;
    m.params_.reserve(params_.size());
    for (const auto& t : params_) m.params_.push_back(t.template cast<Other>());
    return m;
  }

  void check_shapes() const;  // throws std::invalid_argument on inconsistent tensors

 private:
  template <typename>
  friend class Model;
  struct Cache;
  void forward(const MessageGraph& g, std::array<bool, kNumNodeTypes> outputs, Cache& cache) const;

  ModelConfig config_;
  std::array<std::uint32_t, kNumNodeTypes> counts_{};
  Tensors<Scalar> params_;
};

extern template class Model<double>;
extern template class Model<long double>;

/// Numerically stable -[y log p + (1-y) log(1-p)] for p = sigmoid(logit).
template <typename Scalar>
Scalar bce_with_logit(Scalar logit, Scalar label) {
  using std::exp;
  using std::log1p;
  const Scalar softplus = logit > 0 ? logit + log1p(exp(-logit)) : log1p(exp(logit));
  return softplus - label * logit;
}

}  // namespace acnet::gnn
