#include <acnet/binary_io.hpp>
#include <acnet/gnn/checkpoint.hpp>

#include <fstream>
#include <sstream>

namespace acnet::gnn {

namespace {

void write_tensors(io::LeWriter& w, const Tensors<double>& ts) {
  w.u32(static_cast<std::uint32_t>(ts.size()));
  for (const auto& t : ts) {
    w.u64(static_cast<std::uint64_t>(t.rows()));
    w.u64(static_cast<std::uint64_t>(t.cols()));
    for (Eigen::Index i = 0; i < t.size(); ++i) w.f64(t.data()[i]);
  }
}

Tensors<double> read_tensors(io::LeReader& r, const Tensors<double>* like) {
  const std::uint32_t n = r.u32();
  if (like && n != like->size()) throw DataError("checkpoint tensor count mismatch");
  Tensors<double> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (rows > (1ull << 32) || cols > (1ull << 20)) throw DataError("checkpoint tensor shape out of range");
    if (like && (static_cast<std::uint64_t>((*like)[i].rows()) != rows ||
                 static_cast<std::uint64_t>((*like)[i].cols()) != cols)) {
      throw DataError("checkpoint optimizer state does not match tensor shapes");
    }
    Matrix<double> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = r.f64();
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, std::ostream& out) {
  io::LeWriter w(out);
  w.magic("ANPM");
  w.u32(kCheckpointFormatVersion);
  const TrainConfig& c = ck.config;
  w.u32(c.epochs);
  w.u32(c.patience);
  w.u32(c.batch_size);
  w.f64(c.learning_rate);
  w.f64(c.beta1);
  w.f64(c.beta2);
  w.f64(c.epsilon);
  w.u64(c.seed);
  w.u32(c.model.dim);
  w.u32(c.model.hidden);
  w.u8(static_cast<std::uint8_t>(c.model.aggregation));
  for (std::uint32_t n : ck.model.counts()) w.u32(n);
  w.u32(ck.best_epoch);
  write_tensors(w, ck.model.params());
  w.u64(ck.optimizer.step);
  write_tensors(w, ck.optimizer.m);
  write_tensors(w, ck.optimizer.v);
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_checkpoint(ck, out);
}

Checkpoint load_checkpoint(std::istream& in) {
  io::LeReader r(in);
  r.expect_magic("ANPM");
  if (const auto v = r.u32(); v != kCheckpointFormatVersion) {
    throw DataError("unsupported checkpoint format version " + std::to_string(v));
  }
  Checkpoint ck;
  TrainConfig& c = ck.config;
  c.epochs = r.u32();
  c.patience = r.u32();
  c.batch_size = r.u32();
  c.learning_rate = r.f64();
  c.beta1 = r.f64();
  c.beta2 = r.f64();
  c.epsilon = r.f64();
  c.seed = r.u64();
  c.model.dim = r.u32();
  c.model.hidden = r.u32();
  const std::uint8_t agg = r.u8();
  if (agg > static_cast<std::uint8_t>(Aggregation::Max)) throw DataError("checkpoint has an unknown aggregation");
  c.model.aggregation = static_cast<Aggregation>(agg);
  std::array<std::uint32_t, kNumNodeTypes> counts{};
  for (auto& n : counts) n = r.u32();
  ck.best_epoch = r.u32();
  try {
    c.validate();
    ck.model = Model<double>(c.model, counts, c.seed);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint config is invalid: ") + e.what());
  }
  ck.model.params() = read_tensors(r, &ck.model.params());
  ck.optimizer.step = r.u64();
  const Tensors<double>* like = &ck.model.params();
  // Moments are empty when the optimizer never stepped.
  ck.optimizer.m = read_tensors(r, ck.optimizer.step ? like : nullptr);
  ck.optimizer.v = read_tensors(r, ck.optimizer.step ? like : nullptr);
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out) {
  out << "epoch,train_loss,val_loss,val_acc\n";
  const auto old = out.precision(17);
  for (const auto& e : history) out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.val_acc << '\n';
  out.precision(old);
}

void save_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_history_csv(history, out);
}

std::vector<EpochRecord> read_history_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("epoch,train_loss,val_loss,val_acc", 0) != 0) {
    throw DataError("history CSV is missing its header");
  }
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    EpochRecord e;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(row >> e.epoch >> c1 >> e.train_loss >> c2 >> e.val_loss >> c3 >> e.val_acc) || c1 != ',' || c2 != ',' ||
        c3 != ',') {
      throw DataError("malformed history row: " + line);
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace acnet::gnn
