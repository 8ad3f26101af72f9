#include <acnet/gnn/model.hpp>
#include <acnet/rng.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace acnet::gnn {

std::string_view to_string(Aggregation a) noexcept {
  switch (a) {
    case Aggregation::Sum:
      return "sum";
    case Aggregation::Mean:
      return "mean";
    case Aggregation::Min:
      return "min";
    case Aggregation::Max:
      return "max";
  }
  return "?";
}

Aggregation parse_aggregation(std::string_view s) {
  if (s == "sum") return Aggregation::Sum;
  if (s == "mean") return Aggregation::Mean;
  if (s == "min") return Aggregation::Min;
  if (s == "max") return Aggregation::Max;
  throw std::invalid_argument("unknown aggregation '" + std::string(s) + "'");
}

namespace layout {

std::string tensor_name(std::size_t i) {
  if (i < kNumNodeTypes) return "embedding." + std::string(to_string(static_cast<NodeType>(i)));
  if (i == kYearProjection) return "year_projection";
  if (i >= kDecoderW1 && i < kTensorCount) {
    constexpr const char* names[] = {"decoder.w1", "decoder.b1", "decoder.w2", "decoder.b2"};
    return names[i - kDecoderW1];
  }
  if (i >= kTensorCount) throw std::out_of_range("tensor index out of range");
  const std::size_t rel = i - (kNumNodeTypes + 1);
  const std::size_t layer = rel / kPerLayer;
  const std::size_t k = rel % kPerLayer;
  const std::string prefix = "layer" + std::to_string(layer) + ".";
  if (k < kNumNodeTypes) return prefix + "self." + std::string(to_string(static_cast<NodeType>(k)));
  if (k < kNumNodeTypes + kNumChannels) return prefix + "weight." + channel_name(k - kNumNodeTypes);
  return prefix + "bias." + channel_name(k - kNumNodeTypes - kNumChannels);
}

}  // namespace layout

namespace {

struct Shape {
  Eigen::Index rows;
  Eigen::Index cols;
  bool is_weight;  // uniform fan-in init; otherwise zero
};

Shape shape_of(std::size_t i, const ModelConfig& cfg, const std::array<std::uint32_t, kNumNodeTypes>& counts) {
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  const auto h = static_cast<Eigen::Index>(cfg.hidden);
  if (i < kNumNodeTypes) return {static_cast<Eigen::Index>(counts[i]), d, false};
  if (i == layout::kYearProjection) return {1, d, true};
  if (i == layout::kDecoderW1) return {2 * d, h, true};
  if (i == layout::kDecoderB1) return {1, h, false};
  if (i == layout::kDecoderW2) return {h, 1, true};
  if (i == layout::kDecoderB2) return {1, 1, false};
  const std::size_t k = (i - (kNumNodeTypes + 1)) % layout::kPerLayer;
  if (k < kNumNodeTypes + kNumChannels) return {d, d, true};
  return {1, d, false};
}

}  // namespace

template <typename Scalar>
Model<Scalar>::Model(const ModelConfig& config, const std::array<std::uint32_t, kNumNodeTypes>& counts,
                     std::uint64_t seed)
    : config_(config), counts_(counts) {
  if (config.dim == 0 || config.hidden == 0) throw std::invalid_argument("model dimensions must be positive");
  params_.reserve(layout::kTensorCount);
  for (std::size_t i = 0; i < layout::kTensorCount; ++i) {
    const Shape s = shape_of(i, config_, counts_);
    Matrix<Scalar> m = Matrix<Scalar>::Zero(s.rows, s.cols);
    KeyedRng rng(seed, {stream::kInit, i});
    if (i < kNumNodeTypes) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(config_.dim));
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<Scalar>(rng.normal() * scale);
    } else if (s.is_weight) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(s.rows));
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * bound);
    }
    params_.push_back(std::move(m));
  }
}

template <typename Scalar>
void Model<Scalar>::check_shapes() const {
  if (params_.size() != layout::kTensorCount) throw std::invalid_argument("model has the wrong number of tensors");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Shape s = shape_of(i, config_, counts_);
    if (params_[i].rows() != s.rows || params_[i].cols() != s.cols) {
      throw std::invalid_argument("tensor " + layout::tensor_name(i) + " has shape " +
                                  std::to_string(params_[i].rows()) + "x" + std::to_string(params_[i].cols()) +
                                  ", expected " + std::to_string(s.rows) + "x" + std::to_string(s.cols));
    }
  }
}

template <typename Scalar>
Tensors<Scalar> Model<Scalar>::zeros_like() const {
  Tensors<Scalar> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(Matrix<Scalar>::Zero(p.rows(), p.cols()));
  return out;
}

template <typename Scalar>
struct Model<Scalar>::Cache {
  Representations<Scalar> x0;
  // Per layer: aggregated neighbour features per channel and, for min/max,
  // the sender selected for each (row, column).
  std::array<std::array<Matrix<Scalar>, kNumChannels>, layout::kLayers> agg;
  std::array<std::array<std::vector<std::uint32_t>, kNumChannels>, layout::kLayers> pick;
  std::array<Representations<Scalar>, layout::kLayers> z;  // pre-activations
  Representations<Scalar> h1;
  std::array<std::array<bool, kNumNodeTypes>, layout::kLayers> active{};
};

namespace {

template <typename Scalar>
void aggregate(const Csr& in, const Matrix<Scalar>& src, Aggregation agg, Matrix<Scalar>& out,
               std::vector<std::uint32_t>& pick) {
  const auto rows = static_cast<Eigen::Index>(in.rows());
  const Eigen::Index d = src.cols();
  out = Matrix<Scalar>::Zero(rows, d);
  const bool extremum = agg == Aggregation::Min || agg == Aggregation::Max;
  if (extremum) pick.assign(static_cast<std::size_t>(rows * d), 0);
  for (Eigen::Index v = 0; v < rows; ++v) {
    const auto nbrs = in.row(static_cast<std::uint32_t>(v));
    if (nbrs.empty()) continue;
    if (!extremum) {
      for (std::uint32_t u : nbrs) out.row(v) += src.row(u);
      if (agg == Aggregation::Mean) out.row(v) /= static_cast<Scalar>(nbrs.size());
      continue;
    }
    std::uint32_t* sel = pick.data() + v * d;
    for (Eigen::Index k = 0; k < d; ++k) {
      std::uint32_t best = nbrs[0];
      Scalar val = src(best, k);
      for (std::size_t j = 1; j < nbrs.size(); ++j) {
        const Scalar x = src(nbrs[j], k);
        if (agg == Aggregation::Max ? x > val : x < val) {
          val = x;
          best = nbrs[j];
        }
      }
      out(v, k) = val;
      sel[k] = best;
    }
  }
}

template <typename Scalar>
void scatter_aggregate(const Csr& in, Aggregation agg, const Matrix<Scalar>& d_out,
                       const std::vector<std::uint32_t>& pick, Matrix<Scalar>& d_src) {
  const Eigen::Index d = d_out.cols();
  for (Eigen::Index v = 0; v < d_out.rows(); ++v) {
    const auto nbrs = in.row(static_cast<std::uint32_t>(v));
    if (nbrs.empty()) continue;
    if (agg == Aggregation::Sum || agg == Aggregation::Mean) {
      const Scalar w = agg == Aggregation::Mean ? Scalar(1) / static_cast<Scalar>(nbrs.size()) : Scalar(1);
      for (std::uint32_t u : nbrs) d_src.row(u) += w * d_out.row(v);
    } else {
      const std::uint32_t* sel = pick.data() + v * d;
      for (Eigen::Index k = 0; k < d; ++k) d_src(sel[k], k) += d_out(v, k);
    }
  }
}

}  // namespace

template <typename Scalar>
void Model<Scalar>::forward(const MessageGraph& g, std::array<bool, kNumNodeTypes> outputs, Cache& cache) const {
  if (g.counts != counts_) throw std::invalid_argument("message graph does not match the model's node counts");
  check_shapes();

  for (std::size_t t = 0; t < kNumNodeTypes; ++t) cache.x0[t] = params_[t];
  const auto& proj = params_[layout::kYearProjection];
  auto& xp = cache.x0[to_index(NodeType::Paper)];
  for (Eigen::Index i = 0; i < xp.rows(); ++i) xp.row(i) += static_cast<Scalar>(g.paper_year[i]) * proj;

  // Layer 2 is needed for `outputs`; layer 1 for those plus every sender into them.
  cache.active[1] = outputs;
  cache.active[0] = outputs;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    if (outputs[to_index(channel_target(c))] && g.in[c].edge_count() > 0)
      cache.active[0][to_index(channel_source(c))] = true;
  }

  for (std::size_t l = 0; l < layout::kLayers; ++l) {
    const Representations<Scalar>& x = l == 0 ? cache.x0 : cache.h1;
    for (std::size_t t = 0; t < kNumNodeTypes; ++t) {
      if (!cache.active[l][t]) {
        cache.z[l][t].resize(0, 0);
        continue;
      }
      const NodeType type = static_cast<NodeType>(t);
      Matrix<Scalar> z = x[t] * params_[layout::self(l, type)];
      for (std::size_t c = 0; c < kNumChannels; ++c) {
        if (channel_target(c) != type || g.in[c].edge_count() == 0) continue;
        aggregate(g.in[c], x[to_index(channel_source(c))], config_.aggregation, cache.agg[l][c], cache.pick[l][c]);
        z.noalias() += cache.agg[l][c] * params_[layout::weight(l, c)];
        const auto& b = params_[layout::bias(l, c)];
        for (Eigen::Index v = 0; v < z.rows(); ++v) {
          if (!g.in[c].row(static_cast<std::uint32_t>(v)).empty()) z.row(v) += b;
        }
      }
      cache.z[l][t] = std::move(z);
    }
    if (l == 0) {
      for (std::size_t t = 0; t < kNumNodeTypes; ++t) cache.h1[t] = cache.z[0][t].cwiseMax(Scalar(0));
    }
  }
}

template <typename Scalar>
Representations<Scalar> Model<Scalar>::encode(const MessageGraph& g, std::array<bool, kNumNodeTypes> outputs) const {
  Cache cache;
  forward(g, outputs, cache);
  return std::move(cache.z[1]);
}

template <typename Scalar>
Scalar Model<Scalar>::decode(const Matrix<Scalar>& author_repr, const AuthorPair& pair) const {
  const auto d = static_cast<Eigen::Index>(config_.dim);
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> e(2 * d);
  e << author_repr.row(pair.a), author_repr.row(pair.b);
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> u =
      (e * params_[layout::kDecoderW1] + params_[layout::kDecoderB1]).cwiseMax(Scalar(0));
  const Scalar s = (u * params_[layout::kDecoderW2])(0, 0) + params_[layout::kDecoderB2](0, 0);
  using std::exp;
  return Scalar(1) / (Scalar(1) + exp(-s));
}

template <typename Scalar>
std::vector<Scalar> Model<Scalar>::predict(const MessageGraph& g, std::span<const LabeledPair> batch) const {
  const auto reps = encode(g, {true, false, false});
  const auto& h = reps[to_index(NodeType::Author)];
  std::vector<Scalar> out;
  out.reserve(batch.size());
  for (const auto& ex : batch) out.push_back(decode(h, ex.pair));
  return out;
}

template <typename Scalar>
Scalar Model<Scalar>::loss_and_grad(const MessageGraph& g, std::span<const LabeledPair> batch,
                                    Tensors<Scalar>* grad) const {
  if (batch.empty()) throw std::invalid_argument("loss over an empty batch");
  Cache cache;
  forward(g, {true, false, false}, cache);
  const auto& ha = cache.z[1][to_index(NodeType::Author)];

  const auto d = static_cast<Eigen::Index>(config_.dim);
  const auto n = static_cast<Eigen::Index>(batch.size());
  Matrix<Scalar> e(n, 2 * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = batch[static_cast<std::size_t>(i)].pair;
    if (p.b >= static_cast<std::uint32_t>(ha.rows())) throw std::out_of_range("pair references an unknown author");
    e.row(i) << ha.row(p.a), ha.row(p.b);
  }
  Matrix<Scalar> u = e * params_[layout::kDecoderW1];
  u.rowwise() += params_[layout::kDecoderB1].row(0);
  const Matrix<Scalar> r = u.cwiseMax(Scalar(0));
  Matrix<Scalar> s = r * params_[layout::kDecoderW2];
  s.array() += params_[layout::kDecoderB2](0, 0);

  Scalar loss = 0;
  Matrix<Scalar> ds(n, 1);
  using std::exp;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar y = static_cast<Scalar>(batch[static_cast<std::size_t>(i)].label);
    loss += bce_with_logit(s(i, 0), y);
    ds(i, 0) = (Scalar(1) / (Scalar(1) + exp(-s(i, 0))) - y) / static_cast<Scalar>(n);
  }
  loss /= static_cast<Scalar>(n);
  if (!grad) return loss;

  Tensors<Scalar>& gr = *grad;
  gr = zeros_like();
  gr[layout::kDecoderW2] = r.transpose() * ds;
  gr[layout::kDecoderB2](0, 0) = ds.sum();
  Matrix<Scalar> du = ds * params_[layout::kDecoderW2].transpose();
  du = du.cwiseProduct((u.array() > Scalar(0)).template cast<Scalar>().matrix());
  gr[layout::kDecoderW1] = e.transpose() * du;
  gr[layout::kDecoderB1] = du.colwise().sum();
  const Matrix<Scalar> de = du * params_[layout::kDecoderW1].transpose();

  // Gradients w.r.t. layer outputs, walked back through both layers.
  Representations<Scalar> dz;
  dz[to_index(NodeType::Author)] = Matrix<Scalar>::Zero(ha.rows(), d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = batch[static_cast<std::size_t>(i)].pair;
    dz[to_index(NodeType::Author)].row(p.a) += de.row(i).head(d);
    dz[to_index(NodeType::Author)].row(p.b) += de.row(i).tail(d);
  }

  for (std::size_t li = layout::kLayers; li-- > 0;) {
    const Representations<Scalar>& x = li == 0 ? cache.x0 : cache.h1;
    Representations<Scalar> dx;
    for (std::size_t t = 0; t < kNumNodeTypes; ++t) dx[t] = Matrix<Scalar>::Zero(x[t].rows(), x[t].cols());
    for (std::size_t t = 0; t < kNumNodeTypes; ++t) {
      if (!cache.active[li][t] || dz[t].size() == 0) continue;
      const NodeType type = static_cast<NodeType>(t);
      gr[layout::self(li, type)].noalias() += x[t].transpose() * dz[t];
      dx[t].noalias() += dz[t] * params_[layout::self(li, type)].transpose();
      for (std::size_t c = 0; c < kNumChannels; ++c) {
        if (channel_target(c) != type || g.in[c].edge_count() == 0) continue;
        gr[layout::weight(li, c)].noalias() += cache.agg[li][c].transpose() * dz[t];
        auto& gb = gr[layout::bias(li, c)];
        for (Eigen::Index v = 0; v < dz[t].rows(); ++v) {
          if (!g.in[c].row(static_cast<std::uint32_t>(v)).empty()) gb += dz[t].row(v);
        }
        const Matrix<Scalar> dagg = dz[t] * params_[layout::weight(li, c)].transpose();
        scatter_aggregate(g.in[c], config_.aggregation, dagg, cache.pick[li][c], dx[to_index(channel_source(c))]);
      }
    }
    if (li == 1) {
      for (std::size_t t = 0; t < kNumNodeTypes; ++t) {
        if (!cache.active[0][t]) {
          dz[t].resize(0, 0);
          continue;
        }
        dz[t] = dx[t].cwiseProduct((cache.z[0][t].array() > Scalar(0)).template cast<Scalar>().matrix());
      }
    } else {
      for (std::size_t t = 0; t < kNumNodeTypes; ++t) gr[t] += dx[t];
      const auto& dp = dx[to_index(NodeType::Paper)];
      for (Eigen::Index i = 0; i < dp.rows(); ++i)
        gr[layout::kYearProjection] += static_cast<Scalar>(g.paper_year[i]) * dp.row(i);
    }
  }
  return loss;
}

template class Model<double>;
template class Model<long double>;

}  // namespace acnet::gnn
