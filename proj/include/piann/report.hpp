// SPDX-License-Identifier: Apache-2.0
/**
 * @file   report.hpp
 * @brief  Accuracy of predicted saturation profiles against the exact
 *         solution, attention-map statistics, and the experiment tables
 *         (profiles, attention, training log, resolution study, residual
 *         scheme comparison).
 *
 * CSV schemas:
 *   profiles   M,t,x,u_pred,u_exact
 *   attention  i,j,alpha
 *   log        epoch,loss,seconds
 *   resolution dx,dt,residual
 *   schemes    M,t,x,u_central,u_upwind,u_exact
 */
#pragma once

#include <piann/csv.hpp>
#include <piann/model.hpp>
#include <piann/trainer.hpp>

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace piann {

inline constexpr double kShockFloor = 0.05;
inline constexpr double kShockKeep = 0.75;

/// Shock position estimate from one profile.
///
/// Each interior node scores its relative descent
/// r_i = (u_{i-1} - u_{i+1}) / max(u_{i-1}, kShockFloor). Among nodes with
/// r_i >= kShockKeep * max r, the one with the largest absolute descent wins
/// (first on ties).
///
/// A jump down to the undisturbed state scores 1. A rarefaction fan
/// (u_{i+1} >= u* > 0) scores below 1 however steep it is near the inflow
/// boundary, and the absolute pass keeps a smeared front centred.
double shock_location(std::span<const double> x, std::span<const double> u);

struct EvalOptions {
  /// Half-width, in cells, of the band around s*t excluded from the smooth-region error.
  double band_cells = 5.0;
};

struct SliceError {
  double t = 0.0;
  double l2 = 0.0;       // sqrt(sum e^2 dx) over all nodes
  double linf = 0.0;
  double l2_smooth = 0.0; // same, restricted to |x - s t| > band
  double linf_smooth = 0.0;
  double linf_band = 0.0; // max error inside the band
  double shock_exact = 0.0;     // s * t
  double shock_predicted = 0.0; // steepest-descent estimate
  double shock_error_cells = 0.0;
  bool shock_in_domain = true;  // s * t inside (x_0, x_N)
};

struct EvalReport {
  double m = 0.0;
  double shock_speed = 0.0;
  double dx = 0.0;
  double band_cells = 0.0;
  std::vector<SliceError> slices;
  std::optional<double> residual; // ||R1 + R2||_F^2 on the evaluation grid
};

using ProfileFn = std::function<std::vector<double>(double t)>;

/// Compares `predict(t)` on nodes x against the exact solution.
EvalReport evaluate_profiles(const ProfileFn &predict, std::span<const double> x,
                             double m, std::span<const double> times,
                             const EvalOptions &options = {});

/// evaluate_profiles for a trained model, plus its residual on `residual_grid`
/// when given.
EvalReport evaluate(const PiannModel &model, double m, std::span<const double> times,
                    const EvalOptions &options = {},
                    const ResidualConfig *residual_config = nullptr);

CsvTable profiles_table(const PiannModel &model, double m, std::span<const double> times);

struct AttentionReport {
  double m = 0.0;
  double t = 0.0;
  Tensor alpha;                     // [N x N], rows sum to 1
  std::vector<double> row_entropy;  // -sum_j a_ij log a_ij
  double mean_entropy = 0.0;
};

/// Attention weights at (t, m), t > 0.
AttentionReport attention_map(const PiannModel &model, double m, double t);
AttentionReport attention_report(const Tensor &alpha, double m, double t);
CsvTable attention_table(const AttentionReport &report);

CsvTable log_table(const TrainLog &log);

/// Mean of squared residual entries: ||R1 + R2||_F^2 / (number of entries).
double mean_residual(const PiannModel &model, const ResidualConfig &config, double m);

struct ResolutionRow {
  double dx = 0.0;
  double dt = 0.0;
  double residual = 0.0;
  double final_loss = 0.0;
};

/// Trains `base` at every (dx, dt) in `resolutions` and reports
/// mean_residual at m_value for each trained model.
std::vector<ResolutionRow>
resolution_study(const TrainConfig &base,
                 std::span<const std::pair<double, double>> resolutions, double m_value,
                 const EpochCallback &on_epoch = {});
CsvTable resolution_table(std::span<const ResolutionRow> rows);

struct SchemeComparison {
  double m = 0.0;
  std::vector<double> times;
  std::vector<double> linf_between; // per time, max |u_central - u_upwind|
  CsvTable table;                   // schema "schemes"
};

/// Overlays two models on the same x-grid against the exact solution.
SchemeComparison compare_residual_schemes(const PiannModel &central,
                                          const PiannModel &upwind, double m,
                                          std::span<const double> times);

} // namespace piann
