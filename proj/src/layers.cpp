// SPDX-License-Identifier: Apache-2.0
#include <piann/layers.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

namespace piann {

std::size_t ParamRegistry::add(std::string name, Shape shape, ParamKind kind) {
  if (index_.contains(name))
    throw std::invalid_argument("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), kind, Tensor(std::move(shape))});
  return entries_.size() - 1;
}

std::size_t ParamRegistry::index_of(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamRegistry::scalar_count() const {
  std::size_t n = 0;
  for (const auto &e : entries_)
    n += e.value.size();
  return n;
}

bool ParamRegistry::all_finite() const {
  for (const auto &e : entries_)
    if (!e.value.all_finite())
      return false;
  return true;
}

void init_params(ParamRegistry &registry, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // 53 random mantissa bits -> [0, 1); independent of the standard
  // library's distribution implementation.
  auto uniform01 = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (auto &entry : registry.entries()) {
    if (entry.kind == ParamKind::kBias) {
      entry.value.fill(0.0);
      continue;
    }
    const auto &shape = entry.value.shape();
    const double fan_out = static_cast<double>(shape.at(0));
    const double fan_in = shape.size() > 1 ? static_cast<double>(shape[1]) : 1.0;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto &v : entry.value.storage())
      v = (2.0 * uniform01() - 1.0) * limit;
  }
}

std::vector<Var> bind_params(Tape &tape, const ParamRegistry &registry,
                             bool trainable) {
  std::vector<Var> out;
  out.reserve(registry.size());
  for (const auto &e : registry.entries())
    out.push_back(trainable ? tape.parameter(e.value) : tape.constant(e.value));
  return out;
}

std::vector<Dual> bind_params_dual(Tape &tape, const ParamRegistry &registry,
                                   bool trainable) {
  std::vector<Dual> out;
  out.reserve(registry.size());
  for (const auto &v : bind_params(tape, registry, trainable))
    out.emplace_back(v);
  return out;
}

DenseLayer DenseLayer::create(ParamRegistry &reg, const std::string &name,
                              std::size_t in, std::size_t out) {
  DenseLayer layer;
  layer.in = in;
  layer.out = out;
  layer.weight = reg.add(name + ".weight", Shape{out, in}, ParamKind::kWeight);
  layer.bias = reg.add(name + ".bias", Shape{out}, ParamKind::kBias);
  return layer;
}

GruCell GruCell::create(ParamRegistry &reg, const std::string &name,
                        std::size_t in, std::size_t hidden) {
  GruCell cell;
  cell.in = in;
  cell.hidden = hidden;
  auto w = [&](const char *gate) {
    return reg.add(name + ".W_" + gate, Shape{hidden, in}, ParamKind::kWeight);
  };
  auto u = [&](const char *gate) {
    return reg.add(name + ".U_" + gate, Shape{hidden, hidden}, ParamKind::kWeight);
  };
  auto b = [&](const char *gate) {
    return reg.add(name + ".b_" + gate, Shape{hidden}, ParamKind::kBias);
  };
  cell.w_z = w("z");
  cell.u_z = u("z");
  cell.b_z = b("z");
  cell.w_r = w("r");
  cell.u_r = u("r");
  cell.b_r = b("r");
  cell.w_h = w("h");
  cell.u_h = u("h");
  cell.b_h = b("h");
  return cell;
}

std::string to_string(ScorerKind kind) {
  return kind == ScorerKind::kAdditive ? "additive" : "linear";
}

ScorerKind scorer_from_string(const std::string &text) {
  if (text == "additive")
    return ScorerKind::kAdditive;
  if (text == "linear")
    return ScorerKind::kLinear;
  throw std::invalid_argument("unknown scorer kind '" + text +
                              "' (expected additive or linear)");
}

AttentionScorer AttentionScorer::create(ParamRegistry &reg, const std::string &name,
                                        ScorerKind kind, std::size_t state_dim,
                                        std::size_t width) {
  AttentionScorer s;
  s.kind = kind;
  s.state_dim = state_dim;
  s.width = kind == ScorerKind::kAdditive ? width : 1;
  s.hidden = DenseLayer::create(reg, name + ".hidden", 2 * state_dim, s.width);
  if (kind == ScorerKind::kAdditive)
    s.projection = DenseLayer::create(reg, name + ".projection", s.width, 1);
  return s;
}

} // namespace piann
