#include <acnet/gnn/train.hpp>
#include <acnet/rng.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace acnet::gnn {

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning rate must be > 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw std::invalid_argument("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0)) throw std::invalid_argument("Adam epsilon must be > 0");
  if (model.dim == 0 || model.hidden == 0) throw std::invalid_argument("model dimensions must be positive");
}

void Adam::step(Tensors<double>& params, const Tensors<double>& grad) {
  if (state_.m.empty()) {
    for (const auto& p : params) {
      state_.m.push_back(Matrix<double>::Zero(p.rows(), p.cols()));
      state_.v.push_back(Matrix<double>::Zero(p.rows(), p.cols()));
    }
  }
  ++state_.step;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(state_.step));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(state_.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state_.m[i].array();
    auto v = state_.v[i].array();
    const auto g = grad[i].array();
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.square();
    params[i].array() -= lr_ * (m / c1) / ((v / c2).sqrt() + eps_);
  }
}

bool EarlyStopping::observe(double value) {
  if (value < best_) {
    best_ = value;
    bad_epochs_ = 0;
    return true;
  }
  ++bad_epochs_;
  return false;
}

Metrics evaluate(const Model<double>& model, const MessageGraph& g, std::span<const LabeledPair> examples) {
  if (examples.empty()) throw std::invalid_argument("cannot evaluate on an empty set");
  const auto probs = model.predict(g, examples);
  Metrics m;
  m.count = examples.size();
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  double loss = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const bool pos = examples[i].label == 1;
    const bool hit = probs[i] >= 0.5;
    correct += pos == hit;
    tp += pos && hit;
    fp += !pos && hit;
    fn += pos && !hit;
    const double p = std::clamp(probs[i], 1e-12, 1.0 - 1e-12);
    loss -= pos ? std::log(p) : std::log1p(-p);
  }
  m.loss = loss / static_cast<double>(examples.size());
  m.accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
  m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;

  // Rank AUC with average ranks for ties.
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
  double pos_rank_sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && probs[order[j]] == probs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (examples[order[k]].label == 1) {
        pos_rank_sum += rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = examples.size() - n_pos;
  m.auc = n_pos && n_neg ? (pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
                               (static_cast<double>(n_pos) * static_cast<double>(n_neg))
                         : 0.5;
  return m;
}

namespace {

bool all_finite(const Tensors<double>& ts) {
  return std::all_of(ts.begin(), ts.end(), [](const Matrix<double>& m) { return m.allFinite(); });
}

}  // namespace

TrainResult train(const MessageGraph& g, const LinkDataset& ds, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  auto train_set = ds.subset(Split::Train);
  const auto val_set = ds.subset(Split::Val);
  if (train_set.empty()) throw std::invalid_argument("training split is empty");
  const auto& monitor = val_set.empty() ? train_set : val_set;

  Model<double> model(config.model, g.counts, config.seed);
  Adam adam(config.learning_rate, config.beta1, config.beta2, config.epsilon);
  EarlyStopping stopper(config.patience);
  TrainResult result;
  result.model = model;
  Tensors<double> grad;

  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    KeyedRng rng(config.seed, {stream::kShuffle, epoch});
    rng.shuffle(std::span<LabeledPair>(train_set));
    double loss_sum = 0;
    for (std::size_t start = 0; start < train_set.size(); start += config.batch_size) {
      const std::size_t len = std::min<std::size_t>(config.batch_size, train_set.size() - start);
      const std::span<const LabeledPair> batch(train_set.data() + start, len);
      const Model<double> before = model;
      const double loss = model.loss_and_grad(g, batch, &grad);
      if (!std::isfinite(loss) || !all_finite(grad)) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch), before, result.history);
      }
      adam.step(model.params(), grad);
      if (!all_finite(model.params())) {
        throw DivergenceError("parameters became non-finite at epoch " + std::to_string(epoch), before,
                              result.history);
      }
      loss_sum += loss * static_cast<double>(len);
    }
    const Metrics val = evaluate(model, g, monitor);
    const EpochRecord rec{epoch, loss_sum / static_cast<double>(train_set.size()), val.loss, val.accuracy};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (stopper.observe(val.loss)) {
      result.model = model;
      result.best_epoch = epoch;
    }
    if (stopper.should_stop()) {
      result.stopped_early = true;
      break;
    }
  }
  result.optimizer = adam.state();
  return result;
}

}  // namespace acnet::gnn
