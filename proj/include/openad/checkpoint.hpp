#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "openad/model.hpp"

namespace openad {

// OADC checkpoint, integers little-endian:
//   "OADC" | u32 version = 1 | u64 header length | UTF-8 JSON header
//   | float32 parameter blobs, concatenated in manifest order
// The header carries the encoder config, temperature mode, training labels,
// training metadata and a manifest of {name, shape, offset, trainable}.

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct TrainingMetadata {
  std::uint64_t epochs = 0;
  std::uint64_t seed = 0;
  std::vector<double> loss_history;  // mean training loss per epoch
  nlohmann::json train_config = nlohmann::json::object();
};

struct Checkpoint {
  Model model;
  std::vector<std::string> labels;  // training label set, in training order
  TrainingMetadata metadata;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Rounds every parameter to float32, i.e. the values a save/load would give.
void round_to_stored_precision(ParameterStore& params);

nlohmann::json encoder_config_to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

std::string temperature_mode_name(TemperatureMode mode);
TemperatureMode parse_temperature_mode(const std::string& name);

}  // namespace openad
