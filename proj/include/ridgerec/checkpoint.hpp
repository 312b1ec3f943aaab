#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "ridgerec/adam.hpp"
#include "ridgerec/model.hpp"

namespace ridgerec {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Versioned binary checkpoint: magic "RFCK", u32 format version, the model
// build parameters and layer table, little-endian float32 parameter blobs in
// declaration order, then the Adam moments (float64), the RNG state and the
// completed-iteration counter. load(save(x)) is bitwise identity on all of it.
struct Checkpoint {
    CaeModel model;
    AdamState adam;
    std::array<uint64_t, 4> rng_state{};
    int64_t iterations_done = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ridgerec
