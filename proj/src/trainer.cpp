// SPDX-License-Identifier: Apache-2.0
#include <piann/checkpoint.hpp>
#include <piann/trainer.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace piann {

void TrainConfig::validate() const {
  grid.validate();
  if (grid.m_values.empty())
    throw std::invalid_argument("training needs at least one mobility ratio");
  if (hidden_dim < 1)
    throw std::invalid_argument("hidden_dim must be at least 1");
  if (!(lr > 0.0) || !std::isfinite(lr))
    throw std::invalid_argument("learning rate must be positive");
  if (!(t_scale > 0.0) || !(m_scale > 0.0))
    throw std::invalid_argument("input scales must be positive");
}

PiannConfig TrainConfig::model_config() const {
  PiannConfig c;
  c.x_nodes = grid.x_nodes();
  c.hidden_dim = hidden_dim;
  c.attention_dim = attention_dim;
  c.scorer = scorer;
  c.t_scale = t_scale;
  c.m_scale = m_scale;
  return c;
}

ResidualConfig TrainConfig::residual_config() const {
  ResidualConfig r;
  r.r1 = r1;
  r.r2 = r2;
  r.grid = grid;
  r.include_first_step = include_first_step;
  return r;
}

TrainState TrainState::initialize(const TrainConfig &config) {
  config.validate();
  PiannModel model(config.model_config());
  init_params(model.params(), config.seed);
  AdamState adam(model.params(), AdamConfig{config.lr});
  return TrainState{config, std::move(model), std::move(adam), 0};
}

namespace {

std::string describe_nonfinite(const LossGradient &lg, std::span<const double> m_list,
                               std::size_t epoch, double &bad_m) {
  std::ostringstream msg;
  msg << "non-finite loss at epoch " << epoch << ":";
  bad_m = m_list.front();
  bool found = false;
  for (std::size_t k = 0; k < m_list.size(); ++k) {
    msg << " M=" << m_list[k] << " loss=" << lg.per_m[k];
    if (!found && !std::isfinite(lg.per_m[k])) {
      bad_m = m_list[k];
      found = true;
    }
  }
  return msg.str();
}

} // namespace

TrainLog train(TrainState &state, const EpochCallback &on_epoch) {
  const TrainConfig &cfg = state.config;
  cfg.validate();
  const ResidualConfig rc = cfg.residual_config();
  const auto &m_list = cfg.grid.m_values;
  TrainLog log;
  log.seed = cfg.seed;
  log.config = cfg;

  auto write_checkpoint = [&] {
    if (!cfg.checkpoint_path.empty())
      save_checkpoint(cfg.checkpoint_path, state);
  };

  using clock = std::chrono::steady_clock;
  while (state.epoch < cfg.epochs) {
    const auto start = clock::now();
    LossGradient lg = loss_and_gradient(state.model, rc, m_list, cfg.threads);
    if (!std::isfinite(lg.loss)) {
      double bad_m = 0.0;
      auto what = describe_nonfinite(lg, m_list, state.epoch, bad_m);
      throw TrainingAborted(what, state.epoch, bad_m);
    }
    state.adam.step(state.model.params(), lg.grads);
    if (!state.model.params().all_finite())
      throw TrainingAborted("non-finite parameter after epoch " +
                                std::to_string(state.epoch),
                            state.epoch, m_list.front());
    const double seconds = std::chrono::duration<double>(clock::now() - start).count();
    log.loss.push_back(lg.loss);
    log.seconds.push_back(seconds);
    if (on_epoch)
      on_epoch(state.epoch, lg.loss, seconds);
    ++state.epoch;
    if (cfg.checkpoint_every && state.epoch % cfg.checkpoint_every == 0)
      write_checkpoint();
  }
  log.final_loss = loss_value(state.model, rc, m_list);
  write_checkpoint();
  return log;
}

std::size_t threads_from_env() {
  const char *raw = std::getenv("PIANN_THREADS");
  if (!raw || !*raw)
    return 1;
  char *end = nullptr;
  const long n = std::strtol(raw, &end, 10);
  if (*end != '\0' || n < 1)
    return 1;
  return static_cast<std::size_t>(n);
}

} // namespace piann
