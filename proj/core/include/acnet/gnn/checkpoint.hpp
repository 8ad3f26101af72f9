#pragma once

#include <acnet/gnn/train.hpp>

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace acnet::gnn {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

/// Everything needed to resume or reproduce a trained model.
struct Checkpoint {
  TrainConfig config;
  Model<double> model;
  AdamState optimizer;
  std::uint32_t best_epoch{0};
};

/// "ANPM" little-endian binary: version, config (including seed), node counts,
/// tensor shapes and values, Adam step and moments.
void save_checkpoint(const Checkpoint& ck, std::ostream& out);
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
/// Throws DataError on a malformed or inconsistent file.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// CSV with header epoch,train_loss,val_loss,val_acc. Values are printed with
/// 17 significant digits so they round-trip.
void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out);
void save_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);
std::vector<EpochRecord> read_history_csv(std::istream& in);

}  // namespace acnet::gnn
