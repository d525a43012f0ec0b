#include "openad/checkpoint.hpp"

#include "openad/binary_io.hpp"
#include "openad/error.hpp"

namespace openad {

using nlohmann::json;

json encoder_config_to_json(const EncoderConfig& config) {
  return json{{"point_widths", config.point_widths},
              {"fuse_widths", config.fuse_widths},
              {"output_dim", config.output_dim},
              {"seed", config.seed},
              {"batch_norm", {{"momentum", config.batch_norm.momentum}, {"epsilon", config.batch_norm.epsilon}}}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig config;
  config.point_widths = j.at("point_widths").get<std::vector<std::size_t>>();
  config.fuse_widths = j.at("fuse_widths").get<std::vector<std::size_t>>();
  config.output_dim = j.at("output_dim").get<std::size_t>();
  config.seed = j.at("seed").get<std::uint64_t>();
  config.batch_norm.momentum = j.at("batch_norm").at("momentum").get<double>();
  config.batch_norm.epsilon = j.at("batch_norm").at("epsilon").get<double>();
  return config;
}

std::string temperature_mode_name(TemperatureMode mode) {
  return mode == TemperatureMode::kLogScale ? "log-scale" : "literal";
}

TemperatureMode parse_temperature_mode(const std::string& name) {
  if (name == "log-scale") return TemperatureMode::kLogScale;
  if (name == "literal") return TemperatureMode::kLiteral;
  throw_usage("unknown temperature mode '" + name + "' (expected log-scale or literal)");
}

void round_to_stored_precision(ParameterStore& params) {
  for (auto& p : params.all()) {
    for (double& v : p.value.values()) v = static_cast<double>(static_cast<float>(v));
  }
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint) {
  const ParameterStore& params = checkpoint.model.params;
  json manifest = json::array();
  std::uint64_t offset = 0;
  for (const auto& p : params.all()) {
    manifest.push_back({{"name", p.name},
                        {"shape", {p.value.rows(), p.value.cols()}},
                        {"offset", offset},
                        {"trainable", p.trainable}});
    offset += 4 * p.value.size();
  }
  const json header{{"format", "OADC"},
                    {"encoder", encoder_config_to_json(checkpoint.model.encoder.config())},
                    {"temperature", temperature_mode_name(checkpoint.model.temperature)},
                    {"labels", checkpoint.labels},
                    {"metadata",
                     {{"epochs", checkpoint.metadata.epochs},
                      {"seed", checkpoint.metadata.seed},
                      {"loss_history", checkpoint.metadata.loss_history},
                      {"train_config", checkpoint.metadata.train_config}}},
                    {"parameters", manifest},
                    {"blob_bytes", offset}};
  const std::string text = header.dump();

  io::ByteWriter w;
  w.raw("OADC");
  w.put<std::uint32_t>(kCheckpointFormatVersion);
  w.put<std::uint64_t>(text.size());
  w.raw(text);
  for (const auto& p : params.all()) {
    for (double v : p.value.values()) w.put<float>(static_cast<float>(v));
  }
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  io::ByteReader r(bytes, "checkpoint");
  if (r.raw(4) != "OADC") throw_data("checkpoint: bad magic (expected OADC)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointFormatVersion) throw_data("checkpoint: unsupported version " + std::to_string(version));
  const auto header_len = r.get<std::uint64_t>();
  if (header_len > r.remaining()) throw_data("checkpoint: truncated header");
  json header;
  try {
    header = json::parse(r.raw(header_len));
  } catch (const json::exception& e) {
    throw_data(std::string("checkpoint: malformed header: ") + e.what());
  }

  try {
    const EncoderConfig config = encoder_config_from_json(header.at("encoder"));
    Checkpoint out{Model::create(config, parse_temperature_mode(header.at("temperature").get<std::string>())),
                   header.at("labels").get<std::vector<std::string>>(),
                   {}};
    const json& meta = header.at("metadata");
    out.metadata.epochs = meta.at("epochs").get<std::uint64_t>();
    out.metadata.seed = meta.at("seed").get<std::uint64_t>();
    out.metadata.loss_history = meta.at("loss_history").get<std::vector<double>>();
    out.metadata.train_config = meta.at("train_config");

    const json& manifest = header.at("parameters");
    ParameterStore& params = out.model.params;
    if (manifest.size() != params.size()) {
      throw_data("checkpoint: manifest lists " + std::to_string(manifest.size()) + " parameters, encoder config implies " +
                 std::to_string(params.size()));
    }
    std::uint64_t expected_offset = 0;
    for (std::size_t k = 0; k < manifest.size(); ++k) {
      Parameter& p = params.at(k);
      const json& entry = manifest[k];
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (name != p.name || shape.size() != 2 || shape[0] != p.value.rows() || shape[1] != p.value.cols()) {
        throw_data("checkpoint: manifest entry '" + name + "' disagrees with expected '" + p.name + "' " +
                   p.value.shape_string());
      }
      if (entry.at("offset").get<std::uint64_t>() != expected_offset) {
        throw_data("checkpoint: unexpected blob offset for '" + name + "'");
      }
      if (entry.at("trainable").get<bool>() != p.trainable) {
        throw_data("checkpoint: trainable flag mismatch for '" + name + "'");
      }
      expected_offset += 4 * p.value.size();
    }
    if (header.at("blob_bytes").get<std::uint64_t>() != expected_offset || r.remaining() != expected_offset) {
      throw_data("checkpoint: parameter blob is " + std::to_string(r.remaining()) + " bytes, manifest needs " +
                 std::to_string(expected_offset));
    }
    for (auto& p : params.all()) {
      for (double& v : p.value.values()) v = static_cast<double>(r.get<float>());
    }
    return out;
  } catch (const json::exception& e) {
    throw_data(std::string("checkpoint: malformed header: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  io::write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace openad
