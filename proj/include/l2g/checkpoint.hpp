#pragma once

// Text checkpoint: effective config, config hash, step count, every parameter
// and the optimizer state as hexfloats (exact round trip).

#include <string>

#include "l2g/config.hpp"

namespace l2g {

struct Checkpoint {
  RunConfig config;
  Model model;
  TrainState state;
};

std::string checkpoint_text(const RunConfig& cfg, const Model& model, const TrainState& state);
void save_checkpoint(const std::string& path, const RunConfig& cfg, const Model& model, const TrainState& state);
Checkpoint parse_checkpoint(const std::string& text);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace l2g
