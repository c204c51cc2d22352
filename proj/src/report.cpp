// SPDX-License-Identifier: Apache-2.0
#include <piann/buckley_leverett.hpp>
#include <piann/report.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace piann {

double shock_location(std::span<const double> x, std::span<const double> u) {
  if (x.size() != u.size() || x.size() < 3)
    throw std::invalid_argument("shock_location needs matching x and u with >= 3 nodes");
  std::vector<double> score(u.size(), 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < u.size(); ++i) {
    score[i] = (u[i - 1] - u[i + 1]) / std::max(u[i - 1], kShockFloor);
    top = std::max(top, score[i]);
  }
  std::size_t best = 1;
  double drop = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < u.size(); ++i) {
    if (score[i] >= kShockKeep * top && u[i - 1] - u[i + 1] > drop) {
      drop = u[i - 1] - u[i + 1];
      best = i;
    }
  }
  return x[best];
}

EvalReport evaluate_profiles(const ProfileFn &predict, std::span<const double> x,
                             double m, std::span<const double> times,
                             const EvalOptions &options) {
  const bl::AnalyticSolution exact(m);
  EvalReport report;
  report.m = m;
  report.shock_speed = exact.shock_speed();
  report.dx = x.size() > 1 ? x[1] - x[0] : 0.0;
  report.band_cells = options.band_cells;
  const double band = options.band_cells * report.dx;

  for (double t : times) {
    const auto u = predict(t);
    if (u.size() != x.size())
      throw std::invalid_argument("prediction length does not match the x-grid");
    SliceError s;
    s.t = t;
    s.shock_exact = exact.shock_speed() * t;
    double sum_sq = 0.0, sum_sq_smooth = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = std::abs(u[i] - exact(x[i], t));
      const double w = report.dx;
      sum_sq += e * e * w;
      s.linf = std::max(s.linf, e);
      if (std::abs(x[i] - s.shock_exact) > band) {
        sum_sq_smooth += e * e * w;
        s.linf_smooth = std::max(s.linf_smooth, e);
      } else {
        s.linf_band = std::max(s.linf_band, e);
      }
    }
    s.l2 = std::sqrt(sum_sq);
    s.l2_smooth = std::sqrt(sum_sq_smooth);
    s.shock_in_domain = t > 0.0 && s.shock_exact > x.front() &&
                        s.shock_exact < x.back() - 2.0 * report.dx;
    s.shock_predicted = shock_location(x, u);
    s.shock_error_cells =
        report.dx > 0.0 ? std::abs(s.shock_predicted - s.shock_exact) / report.dx : 0.0;
    report.slices.push_back(s);
  }
  return report;
}

EvalReport evaluate(const PiannModel &model, double m, std::span<const double> times,
                    const EvalOptions &options, const ResidualConfig *residual_config) {
  auto predict = [&](double t) {
    const auto out = model.forward(t, m);
    return out.u.storage();
  };
  EvalReport report =
      evaluate_profiles(predict, model.config().x_nodes, m, times, options);
  if (residual_config) {
    const double ms[] = {m};
    report.residual = loss_value(model, *residual_config, ms);
  }
  return report;
}

CsvTable profiles_table(const PiannModel &model, double m, std::span<const double> times) {
  const bl::AnalyticSolution exact(m);
  const auto &x = model.config().x_nodes;
  CsvTable table{{"M", "t", "x", "u_pred", "u_exact"}, {}};
  for (double t : times) {
    const auto out = model.forward(t, m);
    for (std::size_t i = 0; i < x.size(); ++i)
      table.rows.push_back({m, t, x[i], out.u[i], exact(x[i], t)});
  }
  return table;
}

AttentionReport attention_report(const Tensor &alpha, double m, double t) {
  AttentionReport r;
  r.m = m;
  r.t = t;
  r.alpha = alpha;
  const std::size_t rows = alpha.dim(0), cols = alpha.dim(1);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    double h = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double a = alpha.at(i, j);
      if (a > 0.0)
        h -= a * std::log(a);
    }
    r.row_entropy.push_back(h);
    total += h;
  }
  r.mean_entropy = rows ? total / static_cast<double>(rows) : 0.0;
  return r;
}

AttentionReport attention_map(const PiannModel &model, double m, double t) {
  if (!(t > 0.0))
    throw std::invalid_argument("attention map needs t > 0");
  auto out = model.forward(t, m);
  return attention_report(*out.attention, m, t);
}

CsvTable attention_table(const AttentionReport &report) {
  CsvTable table{{"i", "j", "alpha"}, {}};
  const std::size_t rows = report.alpha.dim(0), cols = report.alpha.dim(1);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      table.rows.push_back({double(i + 1), double(j + 1), report.alpha.at(i, j)});
  return table;
}

CsvTable log_table(const TrainLog &log) {
  CsvTable table{{"epoch", "loss", "seconds"}, {}};
  for (std::size_t k = 0; k < log.loss.size(); ++k)
    table.rows.push_back({double(k), log.loss[k], log.seconds.at(k)});
  return table;
}

double mean_residual(const PiannModel &model, const ResidualConfig &config, double m) {
  const double ms[] = {m};
  const double entries =
      static_cast<double>(config.grid.x_count() - 2) * static_cast<double>(config.columns());
  return loss_value(model, config, ms) / entries;
}

std::vector<ResolutionRow>
resolution_study(const TrainConfig &base,
                 std::span<const std::pair<double, double>> resolutions, double m_value,
                 const EpochCallback &on_epoch) {
  std::vector<ResolutionRow> rows;
  for (const auto &[dx, dt] : resolutions) {
    TrainConfig cfg = base;
    cfg.grid.dx = dx;
    cfg.grid.dt = dt;
    cfg.checkpoint_path.clear();
    TrainState state = TrainState::initialize(cfg);
    const TrainLog log = train(state, on_epoch);
    rows.push_back({dx, dt, mean_residual(state.model, cfg.residual_config(), m_value),
                    log.final_loss});
  }
  return rows;
}

CsvTable resolution_table(std::span<const ResolutionRow> rows) {
  CsvTable table{{"dx", "dt", "residual"}, {}};
  for (const auto &r : rows)
    table.rows.push_back({r.dx, r.dt, r.residual});
  return table;
}

SchemeComparison compare_residual_schemes(const PiannModel &central,
                                          const PiannModel &upwind, double m,
                                          std::span<const double> times) {
  const auto &x = central.config().x_nodes;
  if (upwind.config().x_nodes != x)
    throw std::invalid_argument("scheme comparison needs models on the same x-grid");
  const bl::AnalyticSolution exact(m);
  SchemeComparison cmp;
  cmp.m = m;
  cmp.table.header = {"M", "t", "x", "u_central", "u_upwind", "u_exact"};
  for (double t : times) {
    const auto a = central.forward(t, m).u;
    const auto b = upwind.forward(t, m).u;
    double linf = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      linf = std::max(linf, std::abs(a[i] - b[i]));
      cmp.table.rows.push_back({m, t, x[i], a[i], b[i], exact(x[i], t)});
    }
    cmp.times.push_back(t);
    cmp.linf_between.push_back(linf);
  }
  return cmp;
}

} // namespace piann
