#pragma once

#include <acnet/gnn/model.hpp>

#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace acnet::gnn {

struct TrainConfig {
  std::uint32_t epochs{500};
  std::uint32_t patience{10};
  std::uint32_t batch_size{1024};
  double learning_rate{1e-5};
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};
  std::uint64_t seed{0};
  ModelConfig model;

  void validate() const;  // throws std::invalid_argument
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct AdamState {
  std::uint64_t step{0};
  Tensors<double> m;
  Tensors<double> v;
};

class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(Tensors<double>& params, const Tensors<double>& grad);
  AdamState& state() noexcept { return state_; }
  const AdamState& state() const noexcept { return state_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  AdamState state_;
};

/// Stops after `patience` consecutive epochs without a strict decrease of the
/// monitored value.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::uint32_t patience) : patience_(patience) {}
  /// Returns true when this value is the new best.
  bool observe(double value);
  bool should_stop() const noexcept { return bad_epochs_ >= patience_; }
  double best() const noexcept { return best_; }

 private:
  std::uint32_t patience_;
  std::uint32_t bad_epochs_{0};
  double best_{std::numeric_limits<double>::infinity()};
};

struct EpochRecord {
  std::uint32_t epoch{0};
  double train_loss{0};
  double val_loss{0};
  double val_acc{0};
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  Model<double> model;  // weights of the best validation epoch
  AdamState optimizer;  // state at the end of training
  std::vector<EpochRecord> history;
  std::uint32_t best_epoch{0};
  bool stopped_early{false};
};

/// Raised when a loss or parameter becomes non-finite. Carries the last
/// finite model so callers can still checkpoint it.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, Model<double> last_finite, std::vector<EpochRecord> history)
      : std::runtime_error(what), last_finite_(std::move(last_finite)), history_(std::move(history)) {}
  const Model<double>& last_finite() const noexcept { return last_finite_; }
  const std::vector<EpochRecord>& history() const noexcept { return history_; }

 private:
  Model<double> last_finite_;
  std::vector<EpochRecord> history_;
};

struct Metrics {
  double loss{0};
  double accuracy{0};
  double precision{0};
  double recall{0};
  double auc{0};
  std::size_t count{0};
};

/// Accuracy uses the p >= 0.5 rule; AUC is the rank statistic with ties
/// counted as one half. Throws std::invalid_argument on an empty set.
Metrics evaluate(const Model<double>& model, const MessageGraph& g, std::span<const LabeledPair> examples);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on the train split with early stopping on validation loss.
/// Deterministic for a given config, graph and dataset.
TrainResult train(const MessageGraph& g, const LinkDataset& ds, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace acnet::gnn
