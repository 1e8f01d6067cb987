#pragma once

// Checkpoint file:
//
//   zerolog-checkpoint <format_version> <manifest_bytes>\n
//   <manifest: JSON text, exactly manifest_bytes bytes>
//   theta_e | theta_omega | theta_d   as little-endian IEEE-754 float32
//
// The manifest records the network config, seed, iteration, the training
// hyperparameters and the length of each blob.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "zerolog/network.hpp"

namespace zerolog::nn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  NetworkConfig network;
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  nlohmann::json hyperparameters = nlohmann::json::object();
  NetworkParams<float> params;

  /// Parameters widened back to double for evaluation.
  NetworkParams<double> params_double() const { return params.cast<double>(); }

  std::string to_bytes() const;
  static Checkpoint from_bytes(const std::string& bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  /// Hex SHA-256 of to_bytes().
  std::string digest() const;
};

/// Rounds parameters to the float32 values a checkpoint would store.
NetworkParams<double> round_to_checkpoint(const NetworkParams<double>& params);

nlohmann::json to_json(const NetworkConfig& c);
NetworkConfig network_config_from_json(const nlohmann::json& j);

}  // namespace zerolog::nn
