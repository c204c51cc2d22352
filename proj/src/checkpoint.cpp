// SPDX-License-Identifier: Apache-2.0
#include <piann/checkpoint.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace piann {

using nlohmann::json;

namespace {

constexpr char kMagic[5] = {'P', 'I', 'A', 'N', 'N'};
constexpr std::size_t kHeaderBytes = 5 + 2 + 8;

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <class T> void put_le(std::vector<std::uint8_t> &out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(std::begin(raw), std::end(raw));
  out.insert(out.end(), std::begin(raw), std::end(raw));
}

template <class T> T get_le(std::span<const std::uint8_t> in, std::size_t at) {
  if (at + sizeof(T) > in.size())
    throw CheckpointError("checkpoint truncated");
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, in.data() + at, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(std::begin(raw), std::end(raw));
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

json grid_to_json(const GridSpec &g) {
  return {{"x_min", g.x_min}, {"x_max", g.x_max}, {"dx", g.dx},
          {"t_min", g.t_min}, {"t_max", g.t_max}, {"dt", g.dt},
          {"m_values", g.m_values}};
}

GridSpec grid_from_json(const json &j) {
  GridSpec g;
  g.x_min = j.at("x_min");
  g.x_max = j.at("x_max");
  g.dx = j.at("dx");
  g.t_min = j.at("t_min");
  g.t_max = j.at("t_max");
  g.dt = j.at("dt");
  g.m_values = j.at("m_values").get<std::vector<double>>();
  return g;
}

} // namespace

json config_to_json(const TrainConfig &c) {
  // Thread count and paths are run-time choices, not model state.
  return {{"grid", grid_to_json(c.grid)},
          {"hidden_dim", c.hidden_dim},
          {"attention_dim", c.attention_dim},
          {"scorer", to_string(c.scorer)},
          {"t_scale", c.t_scale},
          {"m_scale", c.m_scale},
          {"r1_mode", to_string(c.r1)},
          {"r2_mode", to_string(c.r2)},
          {"include_first_step", c.include_first_step},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"seed", c.seed}};
}

TrainConfig config_from_json(const json &j) {
  TrainConfig c;
  c.grid = grid_from_json(j.at("grid"));
  c.hidden_dim = j.at("hidden_dim");
  c.attention_dim = j.at("attention_dim");
  c.scorer = scorer_from_string(j.at("scorer"));
  c.t_scale = j.at("t_scale");
  c.m_scale = j.at("m_scale");
  c.r1 = r1_mode_from_string(j.at("r1_mode"));
  c.r2 = r2_mode_from_string(j.at("r2_mode"));
  c.include_first_step = j.at("include_first_step");
  c.epochs = j.at("epochs");
  c.lr = j.at("lr");
  c.seed = j.at("seed");
  return c;
}

std::vector<std::uint8_t> encode_checkpoint(const TrainState &state) {
  json tensors = json::array();
  std::vector<std::uint8_t> data;
  auto add_block = [&](const std::string &name, const Tensor &t) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}, {"offset", data.size()}});
    for (double v : t.storage())
      put_le(data, v);
  };
  const auto entries = state.model.params().entries();
  for (const auto &e : entries)
    add_block(e.name, e.value);
  for (std::size_t k = 0; k < entries.size(); ++k)
    add_block("adam.m/" + entries[k].name, state.adam.m.at(k));
  for (std::size_t k = 0; k < entries.size(); ++k)
    add_block("adam.v/" + entries[k].name, state.adam.v.at(k));

  json manifest = {{"config", config_to_json(state.config)},
                   {"epoch", state.epoch},
                   {"adam",
                    {{"steps", state.adam.steps},
                     {"lr", state.adam.config.lr},
                     {"beta1", state.adam.config.beta1},
                     {"beta2", state.adam.config.beta2},
                     {"eps", state.adam.config.eps}}},
                   {"tensors", tensors},
                   {"data_bytes", data.size()}};
  const std::string text = manifest.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

TrainState decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 5) != 0)
    throw CheckpointError("not a PIANN checkpoint (bad magic)");
  const auto version = get_le<std::uint16_t>(bytes, 5);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto manifest_len = get_le<std::uint64_t>(bytes, 7);
  if (manifest_len > bytes.size() - kHeaderBytes)
    throw CheckpointError("checkpoint truncated in manifest");
  json manifest;
  try {
    manifest = json::parse(bytes.begin() + kHeaderBytes,
                           bytes.begin() + kHeaderBytes + manifest_len);
  } catch (const json::exception &e) {
    throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  const std::size_t data_start = kHeaderBytes + manifest_len;

  try {
    TrainConfig config = config_from_json(manifest.at("config"));
    PiannModel model(config.model_config());
    const json &adam_j = manifest.at("adam");
    AdamConfig adam_cfg{adam_j.at("lr"), adam_j.at("beta1"), adam_j.at("beta2"),
                        adam_j.at("eps")};
    AdamState adam(model.params(), adam_cfg);
    adam.steps = adam_j.at("steps");

    auto read_block = [&](const std::string &name, Tensor &into) {
      for (const auto &t : manifest.at("tensors")) {
        if (t.at("name") != name)
          continue;
        if (t.at("shape").get<Shape>() != into.shape())
          throw CheckpointError("tensor '" + name + "' has shape " +
                                t.at("shape").dump() + ", model expects " +
                                to_string(into.shape()));
        const std::size_t offset = data_start + t.at("offset").get<std::size_t>();
        auto &dst = into.storage();
        for (std::size_t i = 0; i < dst.size(); ++i)
          dst[i] = get_le<double>(bytes, offset + 8 * i);
        return;
      }
      throw CheckpointError("checkpoint lacks tensor '" + name + "'");
    };
    auto entries = model.params().entries();
    for (std::size_t k = 0; k < entries.size(); ++k) {
      read_block(entries[k].name, entries[k].value);
      read_block("adam.m/" + entries[k].name, adam.m[k]);
      read_block("adam.v/" + entries[k].name, adam.v[k]);
    }
    const std::size_t epoch = manifest.at("epoch");
    return TrainState{std::move(config), std::move(model), std::move(adam), epoch};
  } catch (const json::exception &e) {
    throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path &path, const TrainState &state) {
  const auto bytes = encode_checkpoint(state);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw CheckpointError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw CheckpointError("failed writing '" + path.string() + "'");
}

TrainState load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

} // namespace piann
