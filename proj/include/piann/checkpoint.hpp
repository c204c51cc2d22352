// SPDX-License-Identifier: Apache-2.0
/**
 * @file   checkpoint.hpp
 * @brief  Versioned binary checkpoint container.
 *
 * Layout (all integers little-endian):
 *
 *   offset 0   "PIANN"                 5 magic bytes
 *   offset 5   u16 format version      currently 1
 *   offset 7   u64 manifest length L
 *   offset 15  manifest, L bytes of UTF-8 JSON
 *   offset 15+L data section: raw little-endian f64 blocks
 *
 * The manifest holds the training configuration, the epoch and Adam step
 * counters, and a "tensors" array of {name, shape, offset}, where offset is
 * the byte position of the block inside the data section. Parameters are
 * stored under their registry names, Adam moments under "adam.m/<name>" and
 * "adam.v/<name>".
 */
#pragma once

#include <piann/trainer.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace piann {

inline constexpr std::uint16_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

nlohmann::json config_to_json(const TrainConfig &config);
TrainConfig config_from_json(const nlohmann::json &j);

std::vector<std::uint8_t> encode_checkpoint(const TrainState &state);
TrainState decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Throws CheckpointError on I/O failure or a malformed file.
void save_checkpoint(const std::filesystem::path &path, const TrainState &state);
TrainState load_checkpoint(const std::filesystem::path &path);

} // namespace piann
