#pragma once

#include <filesystem>
#include <vector>

#include "rare/config.hpp"
#include "rare/model.hpp"
#include "rare/trainer.hpp"

namespace rare {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  Model model;
  std::vector<EpochLog> history;
};

/// Binary archive: magic, version, JSON header (config snapshot, history,
/// tensor table), raw little-endian doubles. Written to a temporary file
/// and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const RunConfig& config, const std::vector<EpochLog>& history);

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Writes `text` atomically (temporary file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace rare
