#pragma once

#include "mimvc/training.hpp"

#include <filesystem>

namespace mimvc {

/// Versioned container: a text header (format tag, seed, epoch, optimizer
/// step, then one "name rows cols" line per tensor, closed by "end") followed
/// by the tensors as raw little-endian float64 in column-major order.
///
///   mimvc-model 1
///   seed 42
///   epoch 1500
///   step 1500
///   use_bias 1
///   views 3
///   tensors 42
///   view0.encoder0.weight 16 196
///   ...
///   end
///   <binary payload>
inline constexpr int kModelFormatVersion = 1;

void save_model_state(const ModelState& state, const std::filesystem::path& file);
ModelState load_model_state(const std::filesystem::path& file);

}  // namespace mimvc
