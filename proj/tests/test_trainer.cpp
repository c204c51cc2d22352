// SPDX-License-Identifier: Apache-2.0
#include <piann/checkpoint.hpp>
#include <piann/trainer.hpp>

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace piann;

namespace {

TrainConfig tiny_config(std::size_t epochs = 3) {
  TrainConfig c;
  c.grid.dx = 0.2;
  c.grid.dt = 0.1;
  c.grid.t_max = 0.3;
  c.grid.m_values = {2.0, 10.0};
  c.hidden_dim = 4;
  c.epochs = epochs;
  c.lr = 1e-2;
  c.seed = 5;
  return c;
}

std::filesystem::path temp_path(const std::string &name) {
  return std::filesystem::temp_directory_path() / ("piann_test_" + name);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ParamRegistry one_param(std::vector<double> values) {
  ParamRegistry reg;
  reg.add("w", Shape{values.size()}, ParamKind::kWeight);
  reg.at("w") = Tensor::vector(values);
  return reg;
}

} // namespace

TEST_CASE("first Adam step moves each coordinate by about lr against the gradient") {
  auto reg = one_param({0.5, -1.0, 2.0});
  AdamState adam(reg, AdamConfig{1e-3});
  const std::vector<Tensor> g{Tensor::vector({3.0, -0.02, 1e-3})};
  adam.step(reg, g);
  const Tensor &w = reg.at("w");
  // m_hat = g, v_hat = g^2  =>  step = lr g / (|g| + eps)
  CHECK(w[0] == doctest::Approx(0.5 - 1e-3 * 3.0 / (3.0 + 1e-8)).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(-1.0 + 1e-3 * 0.02 / (0.02 + 1e-8)).epsilon(1e-14));
  CHECK(w[2] == doctest::Approx(2.0 - 1e-3 * 1e-3 / (1e-3 + 1e-8)).epsilon(1e-14));
  CHECK(adam.steps == 1);
}

TEST_CASE("zero gradient leaves parameters unchanged and decays moments") {
  auto fresh = one_param({0.5, -1.0});
  AdamState idle(fresh, AdamConfig{1e-3});
  idle.step(fresh, std::vector<Tensor>{Tensor::vector({0.0, 0.0})});
  CHECK(fresh.at("w") == Tensor::vector({0.5, -1.0}));

  auto reg = one_param({0.5, -1.0});
  AdamState adam(reg, AdamConfig{1e-3});
  adam.step(reg, std::vector<Tensor>{Tensor::vector({1.0, -1.0})});
  const Tensor m1 = adam.m[0], v1 = adam.v[0];
  adam.step(reg, std::vector<Tensor>{Tensor::vector({0.0, 0.0})});
  CHECK(adam.m[0][0] == doctest::Approx(0.9 * m1[0]).epsilon(1e-15));
  CHECK(adam.v[0][0] == doctest::Approx(0.999 * v1[0]).epsilon(1e-15));
}

TEST_CASE("Adam rejects missing or misshaped gradients") {
  auto reg = one_param({1.0, 2.0});
  AdamState adam(reg, AdamConfig{});
  CHECK_THROWS(adam.step(reg, std::vector<Tensor>{}));
  CHECK_THROWS(adam.step(reg, std::vector<Tensor>{Tensor::vector({1.0})}));
}

TEST_CASE("Adam is deterministic") {
  auto a = one_param({0.1, 0.2, 0.3}), b = one_param({0.1, 0.2, 0.3});
  AdamState sa(a, AdamConfig{1e-2}), sb(b, AdamConfig{1e-2});
  for (int k = 0; k < 10; ++k) {
    const std::vector<Tensor> g{Tensor::vector({std::sin(k), std::cos(k), 0.1 * k})};
    sa.step(a, g);
    sb.step(b, g);
  }
  CHECK(a.at("w") == b.at("w"));
}

TEST_CASE("training records finite losses and reduces the tiny loss") {
  auto state = TrainState::initialize(tiny_config(30));
  std::vector<std::size_t> seen;
  const auto log = train(state, [&](std::size_t e, double, double) { seen.push_back(e); });
  REQUIRE(log.loss.size() == 30);
  CHECK(seen.front() == 0);
  CHECK(seen.back() == 29);
  CHECK(log.loss[0] > 0.0);
  for (double l : log.loss)
    CHECK(std::isfinite(l));
  CHECK(log.final_loss < log.loss[0]);
  CHECK(log.seconds.size() == 30);
  CHECK(state.epoch == 30);
  CHECK(state.adam.steps == 30);
}

TEST_CASE("same seed gives byte-identical checkpoints") {
  const auto p1 = temp_path("a.ckpt"), p2 = temp_path("b.ckpt");
  for (const auto &p : {p1, p2}) {
    auto cfg = tiny_config(4);
    cfg.checkpoint_path = p.string();
    auto state = TrainState::initialize(cfg);
    train(state);
  }
  CHECK(read_bytes(p1) == read_bytes(p2));
  auto other = tiny_config(4);
  other.seed = 6;
  other.checkpoint_path = p2.string();
  auto state = TrainState::initialize(other);
  train(state);
  CHECK_FALSE(read_bytes(p1) == read_bytes(p2));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("thread count does not change the trained parameters") {
  auto serial = TrainState::initialize(tiny_config(5));
  train(serial);
  auto cfg = tiny_config(5);
  cfg.threads = 2;
  auto threaded = TrainState::initialize(cfg);
  train(threaded);
  CHECK(encode_checkpoint(serial) == encode_checkpoint(threaded));
}

TEST_CASE("checkpoint round trip reproduces state and loss exactly") {
  auto state = TrainState::initialize(tiny_config(3));
  train(state);
  const auto bytes = encode_checkpoint(state);
  const TrainState back = decode_checkpoint(bytes);
  CHECK(encode_checkpoint(back) == bytes);
  CHECK(back.epoch == state.epoch);
  CHECK(back.adam.steps == state.adam.steps);
  for (std::size_t k = 0; k < state.model.params().size(); ++k) {
    CHECK(back.model.params().at(k) == state.model.params().at(k));
    CHECK(back.adam.m[k] == state.adam.m[k]);
    CHECK(back.adam.v[k] == state.adam.v[k]);
  }
  const auto rc = state.config.residual_config();
  CHECK(loss_value(back.model, rc, state.config.grid.m_values) ==
        loss_value(state.model, rc, state.config.grid.m_values));
}

TEST_CASE("checkpoint header layout") {
  auto state = TrainState::initialize(tiny_config(0));
  const auto bytes = encode_checkpoint(state);
  REQUIRE(bytes.size() > 15);
  CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "PIANN");
  CHECK(bytes[5] == kCheckpointVersion);
  CHECK(bytes[6] == 0);
  std::uint64_t len = 0;
  for (int k = 7; k >= 0; --k)
    len = (len << 8) | bytes[7 + k];
  const auto manifest =
      nlohmann::json::parse(std::string(bytes.begin() + 15, bytes.begin() + 15 + len));
  CHECK(manifest.contains("tensors"));
  CHECK(manifest.at("epoch") == 0);
  std::size_t doubles = 0;
  for (const auto &t : manifest.at("tensors")) {
    std::size_t n = 1;
    for (auto d : t.at("shape"))
      n *= d.get<std::size_t>();
    doubles += n;
  }
  // parameters plus two Adam moments
  CHECK(doubles == 3 * state.model.params().scalar_count());
  CHECK(bytes.size() == 15 + len + 8 * doubles);
}

TEST_CASE("malformed checkpoints are rejected") {
  auto state = TrainState::initialize(tiny_config(0));
  auto bytes = encode_checkpoint(state);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), CheckpointError);
  auto bad_version = bytes;
  bad_version[5] = 9;
  CHECK_THROWS_AS(decode_checkpoint(bad_version), CheckpointError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 8);
  CHECK_THROWS_AS(decode_checkpoint(truncated), CheckpointError);
  CHECK_THROWS_AS(decode_checkpoint(std::vector<std::uint8_t>(4, 0)), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/x.ckpt"), CheckpointError);
  CHECK_THROWS_AS(save_checkpoint("/nonexistent/dir/x.ckpt", state), CheckpointError);
}

TEST_CASE("resuming reproduces the uninterrupted run bit for bit") {
  auto straight = TrainState::initialize(tiny_config(6));
  const auto full = train(straight);

  auto first = tiny_config(6);
  first.epochs = 3;
  auto part = TrainState::initialize(first);
  train(part);
  TrainState resumed = decode_checkpoint(encode_checkpoint(part));
  resumed.config.epochs = 6;
  const auto rest = train(resumed);
  REQUIRE(rest.loss.size() == 3);
  CHECK(rest.loss[0] == full.loss[3]);
  CHECK(rest.loss[2] == full.loss[5]);
  CHECK(encode_checkpoint(resumed) == encode_checkpoint(straight));
}

TEST_CASE("zero epochs writes the initialized checkpoint and an empty log") {
  const auto p = temp_path("zero.ckpt");
  auto cfg = tiny_config(0);
  cfg.checkpoint_path = p.string();
  auto state = TrainState::initialize(cfg);
  const auto log = train(state);
  CHECK(log.loss.empty());
  REQUIRE(std::filesystem::exists(p));
  const TrainState back = load_checkpoint(p);
  CHECK(back.epoch == 0);
  CHECK(back.model.params().at(0) == state.model.params().at(0));
  std::filesystem::remove(p);
}

TEST_CASE("periodic checkpoints") {
  const auto p = temp_path("periodic.ckpt");
  auto cfg = tiny_config(4);
  cfg.checkpoint_path = p.string();
  cfg.checkpoint_every = 2;
  auto state = TrainState::initialize(cfg);
  std::vector<std::size_t> epochs_on_disk;
  train(state, [&](std::size_t e, double, double) {
    if (e == 2 && std::filesystem::exists(p))
      epochs_on_disk.push_back(load_checkpoint(p).epoch);
  });
  REQUIRE(epochs_on_disk.size() == 1);
  CHECK(epochs_on_disk[0] == 2);
  CHECK(load_checkpoint(p).epoch == 4);
  std::filesystem::remove(p);
}

TEST_CASE("non-finite parameters abort with the epoch and M") {
  auto state = TrainState::initialize(tiny_config(3));
  state.model.params().at("readout.bias")[0] = std::nan("");
  try {
    train(state);
    FAIL("expected TrainingAborted");
  } catch (const TrainingAborted &e) {
    CHECK(e.epoch == 0);
    CHECK(e.m == 2.0);
    CHECK(std::string(e.what()).find("M=2") != std::string::npos);
  }
}

TEST_CASE("invalid configurations are rejected") {
  auto cfg = tiny_config();
  cfg.grid.m_values.clear();
  CHECK_THROWS(TrainState::initialize(cfg));
  cfg = tiny_config();
  cfg.lr = 0.0;
  CHECK_THROWS(TrainState::initialize(cfg));
}

TEST_CASE("config json round trip") {
  auto cfg = tiny_config();
  cfg.r2 = R2Mode::kUpwind;
  cfg.scorer = ScorerKind::kLinear;
  cfg.include_first_step = false;
  const auto back = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));
  CHECK(back.r2 == R2Mode::kUpwind);
  CHECK(back.grid.m_values == cfg.grid.m_values);
}

TEST_CASE("PIANN_THREADS parsing") {
  setenv("PIANN_THREADS", "3", 1);
  CHECK(threads_from_env() == 3);
  setenv("PIANN_THREADS", "zero", 1);
  CHECK(threads_from_env() == 1);
  unsetenv("PIANN_THREADS");
  CHECK(threads_from_env() == 1);
}
