// SPDX-License-Identifier: Apache-2.0
/**
 * @file   trainer.hpp
 * @brief  Full-batch Adam training of the PIANN against the residual loss.
 */
#pragma once

#include <piann/adam.hpp>
#include <piann/model.hpp>
#include <piann/residual.hpp>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace piann {

struct TrainConfig {
  GridSpec grid;          // grid.m_values is the training set of M
  std::size_t hidden_dim = 32;
  std::size_t attention_dim = 0;
  ScorerKind scorer = ScorerKind::kAdditive;
  double t_scale = 1.0;
  double m_scale = 100.0;
  R1Mode r1 = R1Mode::kFiniteDifference;
  R2Mode r2 = R2Mode::kCentral;
  bool include_first_step = true;
  std::size_t epochs = 200;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// Write a checkpoint every k epochs (0: only at the end).
  std::size_t checkpoint_every = 0;
  std::string checkpoint_path;

  void validate() const;
  PiannConfig model_config() const;
  ResidualConfig residual_config() const;
};

/// Model plus optimizer state: everything needed for an exact resume.
struct TrainState {
  TrainConfig config;
  PiannModel model;
  AdamState adam;
  std::size_t epoch = 0;

  /// Fresh model with parameters initialized from config.seed.
  static TrainState initialize(const TrainConfig &config);
};

struct TrainLog {
  std::vector<double> loss;    // loss at the start of each epoch
  std::vector<double> seconds; // wall time of each epoch
  double final_loss = 0.0;     // loss after the last update
  std::uint64_t seed = 0;
  TrainConfig config;
};

class TrainingAborted : public std::runtime_error {
public:
  TrainingAborted(const std::string &what, std::size_t epoch, double m)
      : std::runtime_error(what), epoch(epoch), m(m) {}
  std::size_t epoch;
  double m;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss, double seconds)>;

/// Runs state.config.epochs - state.epoch further epochs. Each epoch computes
/// the full-batch loss and gradient, then takes one Adam step. Throws
/// TrainingAborted on a non-finite loss or parameter.
TrainLog train(TrainState &state, const EpochCallback &on_epoch = {});

/// Number of workers requested through PIANN_THREADS (default 1).
std::size_t threads_from_env();

} // namespace piann
