#pragma once

#include "etd/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace etd {

inline constexpr uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'E', 'T', 'D', 'C', 'K', 'P', 'T', '\0'};

// Everything needed to resume or serve a model. Serialized little-endian
// with no timestamps, so identical training runs give identical files.
struct Checkpoint {
    Model model;
    bool has_adam = false;
    AdamState adam; // meaningful only when has_adam
    uint32_t epochs_trained = 0;
    std::vector<double> loss_curve;
    uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Validates magic, version and per-block shapes; throws DataError on any
// mismatch or truncation.
Checkpoint load_checkpoint(const std::string& path);

} // namespace etd
