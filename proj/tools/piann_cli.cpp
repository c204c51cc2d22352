// SPDX-License-Identifier: Apache-2.0
// piann: command-line driver for analytic and finite-volume solves, training,
// evaluation, attention maps, residual-scheme comparison and resolution studies.
#include <piann/buckley_leverett.hpp>
#include <piann/checkpoint.hpp>
#include <piann/csv.hpp>
#include <piann/report.hpp>
#include <piann/svg.hpp>
#include <piann/trainer.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace piann;

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kNumeric = 3 };

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  double x_min = 0.0, x_max = 1.0, dx = 0.01;
  double t_min = 0.0, t_max = 0.5, dt = 0.01;
  std::vector<double> m;
  std::vector<double> m_list;
  std::string m_range;
  std::size_t hidden = 32;
  std::size_t attention_dim = 0;
  std::string scorer = "additive";
  std::string r1 = "finite_difference";
  std::string r2 = "central";
  bool include_first_step = true;
  std::size_t epochs = 200;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;
  std::string checkpoint = "piann.ckpt";
  std::string central_checkpoint;
  std::string upwind_checkpoint;
  std::string out;
  std::string log = "train_log.csv";
  std::string svg;
  std::string times = "0.04,0.2,0.4";
  double t = 0.2;
  std::string resolutions = "0.01:0.01,0.005:0.005";
  double cfl = 0.9;
  double band = 5.0;
  bool resume = false;

  std::vector<double> m_values;
  std::vector<double> time_values;
  std::size_t threads = 1;
};

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep))
    parts.push_back(part);
  return parts;
}

double parse_number(const std::string &s, const std::string &what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    throw std::invalid_argument(what + ": not a number '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v))
    throw std::invalid_argument(what + ": not a number '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string &s, const std::string &what) {
  std::vector<double> values;
  for (const auto &p : split(s, ','))
    values.push_back(parse_number(p, what));
  if (values.empty())
    throw std::invalid_argument(what + " is empty");
  return values;
}

std::vector<double> parse_range(const std::string &s) {
  const auto parts = split(s, ':');
  if (parts.size() != 3)
    throw std::invalid_argument("--m-range expects start:step:end");
  const double start = parse_number(parts[0], "--m-range");
  const double step = parse_number(parts[1], "--m-range");
  const double end = parse_number(parts[2], "--m-range");
  if (!(step > 0.0) || end < start)
    throw std::invalid_argument("--m-range needs step > 0 and end >= start");
  std::vector<double> values;
  const auto count = static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
  for (std::size_t k = 0; k < count; ++k)
    values.push_back(start + static_cast<double>(k) * step);
  return values;
}

void resolve(RunConfig &rc) {
  if (!rc.m_list.empty())
    rc.m_values = rc.m_list;
  else if (!rc.m_range.empty())
    rc.m_values = parse_range(rc.m_range);
  else if (!rc.m.empty())
    rc.m_values = rc.m;
  else
    rc.m_values = {2.0, 10.0, 50.0};
  for (double m : rc.m_values)
    if (!(m > 0.0))
      throw std::invalid_argument("mobility ratio must be positive, got " + format_double(m));
  rc.time_values = parse_list(rc.times, "--times");
  for (double t : rc.time_values)
    if (t < 0.0)
      throw std::invalid_argument("times must be non-negative");
  if (!(rc.band >= 0.0))
    throw std::invalid_argument("--band must be non-negative");
  rc.threads = threads_from_env();
  (void)scorer_from_string(rc.scorer);
  (void)r1_mode_from_string(rc.r1);
  (void)r2_mode_from_string(rc.r2);
}

GridSpec grid_of(const RunConfig &rc) {
  GridSpec g;
  g.x_min = rc.x_min;
  g.x_max = rc.x_max;
  g.dx = rc.dx;
  g.t_min = rc.t_min;
  g.t_max = rc.t_max;
  g.dt = rc.dt;
  g.m_values = rc.m_values;
  g.validate();
  return g;
}

TrainConfig train_config_of(const RunConfig &rc) {
  TrainConfig c;
  c.grid = grid_of(rc);
  c.hidden_dim = rc.hidden;
  c.attention_dim = rc.attention_dim;
  c.scorer = scorer_from_string(rc.scorer);
  c.r1 = r1_mode_from_string(rc.r1);
  c.r2 = r2_mode_from_string(rc.r2);
  c.include_first_step = rc.include_first_step;
  c.epochs = rc.epochs;
  c.lr = rc.lr;
  c.seed = rc.seed;
  c.threads = rc.threads;
  c.checkpoint_every = rc.checkpoint_every;
  c.checkpoint_path = rc.checkpoint;
  c.validate();
  return c;
}

std::string join(const std::vector<double> &v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k)
    s += (k ? "," : "") + format_double(v[k]);
  return s;
}

void echo(const std::string &command, const RunConfig &rc) {
  std::cout << "# piann " << command << '\n'
            << "# grid x=[" << format_double(rc.x_min) << "," << format_double(rc.x_max)
            << "] dx=" << format_double(rc.dx) << " t=[" << format_double(rc.t_min) << ","
            << format_double(rc.t_max) << "] dt=" << format_double(rc.dt) << '\n'
            << "# m_values=" << join(rc.m_values) << '\n'
            << "# hidden=" << rc.hidden << " attention_dim=" << rc.attention_dim
            << " scorer=" << rc.scorer << " r1=" << rc.r1 << " r2=" << rc.r2
            << " include_first_step=" << (rc.include_first_step ? "true" : "false") << '\n'
            << "# epochs=" << rc.epochs << " lr=" << format_double(rc.lr)
            << " seed=" << rc.seed << " threads=" << rc.threads << '\n'
            << "# checkpoint=" << rc.checkpoint << " out=" << rc.out << " svg=" << rc.svg
            << '\n'
            << "# times=" << join(rc.time_values) << " t=" << format_double(rc.t)
            << " band=" << format_double(rc.band) << " cfl=" << format_double(rc.cfl)
            << std::endl;
}

std::string out_or(const RunConfig &rc, const std::string &fallback) {
  return rc.out.empty() ? fallback : rc.out;
}

void write_csv_file(const std::string &path, const CsvTable &table) {
  try {
    save_csv(path, table);
  } catch (const std::runtime_error &e) {
    throw IoError(e.what());
  }
  std::cout << "wrote " << path << " (" << table.rows.size() << " rows)\n";
}

void write_text_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out || !(out << text))
    throw IoError("cannot write '" + path + "'");
  std::cout << "wrote " << path << '\n';
}

TrainState load_model(const std::string &path) {
  if (path.empty())
    throw IoError("no checkpoint given");
  if (!std::filesystem::exists(path))
    throw IoError("checkpoint '" + path + "' not found");
  try {
    return load_checkpoint(path);
  } catch (const CheckpointError &e) {
    throw IoError(e.what());
  }
}

int cmd_analytic(const RunConfig &rc) {
  const GridSpec g = grid_of(rc);
  CsvTable table{{"M", "t", "x", "u_exact"}, {}};
  for (double m : rc.m_values) {
    const SolutionField f = bl::analytic_field(m, g);
    for (std::size_t j = 0; j < f.t.size(); ++j)
      for (std::size_t i = 0; i < f.x.size(); ++i)
        table.rows.push_back({m, f.t[j], f.x[i], f.at(j, i)});
  }
  write_csv_file(out_or(rc, "analytic.csv"), table);
  return kOk;
}

int cmd_fv(const RunConfig &rc) {
  const GridSpec g = grid_of(rc);
  CsvTable table{{"M", "t", "x", "u_fv", "u_exact"}, {}};
  std::vector<svg::Series> series;
  for (double m : rc.m_values) {
    const auto fv = bl::solve_upwind_fv(m, g, rc.cfl);
    const bl::AnalyticSolution exact(m);
    const auto &f = fv.field;
    for (std::size_t j = 0; j < f.t.size(); ++j)
      for (std::size_t i = 0; i < f.x.size(); ++i)
        table.rows.push_back({m, f.t[j], f.x[i], f.at(j, i), exact(f.x[i], f.t[j])});
    const std::size_t last = f.t.size() - 1;
    std::vector<double> u_last(f.x.size()), u_exact(f.x.size());
    double l1 = 0.0;
    for (std::size_t i = 0; i < f.x.size(); ++i) {
      u_last[i] = f.at(last, i);
      u_exact[i] = exact(f.x[i], f.t[last]);
      l1 += std::abs(u_last[i] - u_exact[i]) * g.dx;
    }
    std::cout << "M=" << format_double(m) << " t=" << format_double(f.t[last])
              << " shock_fv=" << format_double(shock_location(f.x, u_last))
              << " shock_exact=" << format_double(exact.shock_speed() * f.t[last])
              << " l1=" << format_double(l1) << " substeps=" << fv.substeps << '\n';
    series.push_back({"FV M=" + format_double(m), f.x, u_last, "#d62728", false});
    series.push_back({"exact M=" + format_double(m), f.x, u_exact, "#000000", true});
  }
  write_csv_file(out_or(rc, "fv.csv"), table);
  if (!rc.svg.empty())
    write_text_file(rc.svg, svg::line_chart(series, {"Upwind FV vs exact at t_max", "x",
                                                     "u", false}));
  return kOk;
}

int cmd_train(const RunConfig &rc) {
  TrainConfig cfg = train_config_of(rc);
  TrainState state = [&] {
    if (!rc.resume)
      return TrainState::initialize(cfg);
    TrainState s = load_model(rc.checkpoint);
    s.config.epochs = cfg.epochs;
    s.config.checkpoint_path = cfg.checkpoint_path;
    s.config.checkpoint_every = cfg.checkpoint_every;
    s.config.threads = cfg.threads;
    return s;
  }();
  auto on_epoch = [](std::size_t epoch, double loss, double) {
    std::cout << "epoch=" << epoch << " loss=" << format_double(loss) << std::endl;
  };
  TrainLog log;
  try {
    log = train(state, on_epoch);
  } catch (const CheckpointError &e) {
    throw IoError(e.what());
  }
  std::cout << "final_loss=" << format_double(log.final_loss) << '\n';
  std::cout << "wrote " << cfg.checkpoint_path << '\n';
  write_csv_file(rc.log, log_table(log));
  if (!rc.svg.empty()) {
    std::vector<double> epochs;
    for (std::size_t k = 0; k < log.loss.size(); ++k)
      epochs.push_back(static_cast<double>(state.epoch - log.loss.size() + k));
    write_text_file(rc.svg, svg::line_chart({{"loss", epochs, log.loss, "#1f77b4", false}},
                                            {"Residual loss per epoch", "epoch", "loss",
                                             true}));
  }
  return kOk;
}

int cmd_eval(const RunConfig &rc) {
  const TrainState state = load_model(rc.checkpoint);
  const PiannModel &model = state.model;
  CsvTable table{{"M", "t", "x", "u_pred", "u_exact"}, {}};
  std::vector<svg::Series> series;
  const char *colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};
  std::size_t c = 0;
  for (double m : rc.m_values) {
    const EvalReport report = evaluate(model, m, rc.time_values, {rc.band});
    std::cout << "M=" << format_double(m) << " shock_speed=" << format_double(report.shock_speed)
              << '\n';
    for (const auto &s : report.slices) {
      std::cout << "  t=" << format_double(s.t) << " l2=" << format_double(s.l2)
                << " linf=" << format_double(s.linf)
                << " linf_smooth=" << format_double(s.linf_smooth)
                << " linf_band=" << format_double(s.linf_band)
                << " shock_exact=" << format_double(s.shock_exact)
                << " shock_pred=" << format_double(s.shock_predicted)
                << " shock_err_cells=" << format_double(s.shock_error_cells)
                << (s.shock_in_domain ? "" : " (shock outside domain)") << '\n';
    }
    const CsvTable part = profiles_table(model, m, rc.time_values);
    table.rows.insert(table.rows.end(), part.rows.begin(), part.rows.end());
    const auto &x = model.config().x_nodes;
    for (double t : rc.time_values) {
      const bl::AnalyticSolution exact(m);
      std::vector<double> ue(x.size());
      for (std::size_t i = 0; i < x.size(); ++i)
        ue[i] = exact(x[i], t);
      const std::string tag = "M=" + format_double(m) + " t=" + format_double(t);
      const char *color = colors[c++ % 5];
      series.push_back({"PIANN " + tag, x, model.forward(t, m).u.storage(), color, false});
      series.push_back({"exact " + tag, x, ue, color, true});
    }
  }
  write_csv_file(out_or(rc, "profiles.csv"), table);
  if (!rc.svg.empty())
    write_text_file(rc.svg, svg::line_chart(series, {"Predicted vs exact saturation", "x",
                                                     "u", false}));
  return kOk;
}

int cmd_attention(const RunConfig &rc) {
  const TrainState state = load_model(rc.checkpoint);
  const double m = rc.m_values.front();
  if (!(rc.t > 0.0))
    throw std::invalid_argument("attention needs --t > 0");
  const AttentionReport report = attention_map(state.model, m, rc.t);
  std::cout << "M=" << format_double(m) << " t=" << format_double(rc.t)
            << " mean_entropy=" << format_double(report.mean_entropy)
            << " uniform_entropy=" << format_double(std::log(double(report.alpha.dim(1))))
            << '\n';
  write_csv_file(out_or(rc, "attention.csv"), attention_table(report));
  if (!rc.svg.empty())
    write_text_file(rc.svg, svg::heatmap(report.alpha, "Attention weights M=" +
                                                           format_double(m) + " t=" +
                                                           format_double(rc.t)));
  return kOk;
}

int cmd_compare(const RunConfig &rc) {
  const TrainState central = load_model(rc.central_checkpoint);
  const TrainState upwind = load_model(rc.upwind_checkpoint);
  const double m = rc.m_values.front();
  const SchemeComparison cmp =
      compare_residual_schemes(central.model, upwind.model, m, rc.time_values);
  for (std::size_t k = 0; k < cmp.times.size(); ++k)
    std::cout << "M=" << format_double(m) << " t=" << format_double(cmp.times[k])
              << " linf_central_upwind=" << format_double(cmp.linf_between[k]) << '\n';
  write_csv_file(out_or(rc, "schemes.csv"), cmp.table);
  if (!rc.svg.empty()) {
    const auto &x = central.model.config().x_nodes;
    const double t = cmp.times.back();
    const bl::AnalyticSolution exact(m);
    std::vector<double> ue(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      ue[i] = exact(x[i], t);
    write_text_file(
        rc.svg,
        svg::line_chart({{"central", x, central.model.forward(t, m).u.storage(), "#1f77b4",
                          false},
                         {"upwind", x, upwind.model.forward(t, m).u.storage(), "#d62728",
                          false},
                         {"exact", x, ue, "#000000", true}},
                        {"Central vs upwind residual, t=" + format_double(t), "x", "u",
                         false}));
  }
  return kOk;
}

int cmd_resolution(const RunConfig &rc) {
  TrainConfig base = train_config_of(rc);
  base.checkpoint_path.clear();
  std::vector<std::pair<double, double>> resolutions;
  for (const auto &item : split(rc.resolutions, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2)
      throw std::invalid_argument("--resolutions expects dx:dt pairs separated by commas");
    resolutions.emplace_back(parse_number(parts[0], "--resolutions"),
                             parse_number(parts[1], "--resolutions"));
  }
  const double m_eval = rc.m.empty() ? 4.5 : rc.m.front();
  auto on_epoch = [](std::size_t epoch, double loss, double) {
    std::cout << "epoch=" << epoch << " loss=" << format_double(loss) << std::endl;
  };
  const auto rows = resolution_study(base, resolutions, m_eval, on_epoch);
  for (const auto &r : rows)
    std::cout << "dx=" << format_double(r.dx) << " dt=" << format_double(r.dt)
              << " residual=" << format_double(r.residual)
              << " final_loss=" << format_double(r.final_loss) << '\n';
  write_csv_file(out_or(rc, "resolution.csv"), resolution_table(rows));
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Physics-informed attention network for Buckley-Leverett flow"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key = value file; flags override its values");
  app.allow_config_extras(false);

  RunConfig rc;
  app.add_option("--x-min", rc.x_min, "Left end of the x-grid");
  app.add_option("--x-max", rc.x_max, "Right end of the x-grid");
  app.add_option("--dx", rc.dx, "Grid spacing in x");
  app.add_option("--t-min", rc.t_min, "First time level");
  app.add_option("--t-max", rc.t_max, "Last time level");
  app.add_option("--dt", rc.dt, "Grid spacing in t");
  app.add_option("--m", rc.m, "Mobility ratio(s)")->allow_extra_args(false);
  app.add_option("--m-list", rc.m_list, "Comma-separated mobility ratios, e.g. 2,4.5,71")
      ->delimiter(',');
  app.add_option("--m-range", rc.m_range, "Mobility ratios start:step:end, e.g. 2:2:100");
  app.add_option("--hidden", rc.hidden, "GRU hidden size");
  app.add_option("--attention-dim", rc.attention_dim, "Attention width (0: hidden size)");
  app.add_option("--scorer", rc.scorer, "additive | linear");
  app.add_option("--r1", rc.r1, "finite_difference | autodiff");
  app.add_option("--r2", rc.r2, "central | upwind");
  app.add_option("--include-first-step", rc.include_first_step,
                 "Include the t0 -> t1 column in the residual (true/false)");
  app.add_option("--epochs", rc.epochs, "Training epochs");
  app.add_option("--lr", rc.lr, "Adam learning rate");
  app.add_option("--seed", rc.seed, "Parameter initialization seed");
  app.add_option("--checkpoint-every", rc.checkpoint_every, "Checkpoint every k epochs");
  app.add_option("--checkpoint", rc.checkpoint, "Checkpoint path");
  app.add_option("--central", rc.central_checkpoint, "Checkpoint trained with central R2");
  app.add_option("--upwind", rc.upwind_checkpoint, "Checkpoint trained with upwind R2");
  app.add_option("--out", rc.out, "Output CSV path");
  app.add_option("--log", rc.log, "Training log CSV path");
  app.add_option("--svg", rc.svg, "Optional SVG chart path");
  app.add_option("--times", rc.times, "Comma-separated evaluation times");
  app.add_option("--t", rc.t, "Time of the attention map");
  app.add_option("--resolutions", rc.resolutions, "dx:dt pairs, coarse to fine");
  app.add_option("--cfl", rc.cfl, "CFL number of the finite-volume solver");
  app.add_option("--band", rc.band, "Shock band half-width in cells");
  app.add_flag("--resume", rc.resume, "Continue training from --checkpoint");

  struct Command {
    const char *name;
    const char *help;
    int (*run)(const RunConfig &);
  };
  const Command commands[] = {
      {"analytic", "Exact solution on the grid -> M,t,x,u_exact", cmd_analytic},
      {"fv", "Upwind finite-volume solution -> M,t,x,u_fv,u_exact", cmd_fv},
      {"train", "Train a model, write checkpoint and loss log", cmd_train},
      {"eval", "Compare a checkpoint against the exact solution", cmd_eval},
      {"attention", "Attention map and row entropy of a checkpoint", cmd_attention},
      {"compare", "Central vs upwind residual checkpoints", cmd_compare},
      {"resolution", "Train at several resolutions and report residuals", cmd_resolution},
  };
  std::vector<CLI::App *> subs;
  for (const auto &c : commands)
    subs.push_back(app.add_subcommand(c.name, c.help)->fallthrough());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  for (std::size_t k = 0; k < subs.size(); ++k) {
    if (!subs[k]->parsed())
      continue;
    try {
      resolve(rc);
      echo(commands[k].name, rc);
      return commands[k].run(rc);
    } catch (const TrainingAborted &e) {
      std::cerr << "error: " << e.what() << '\n';
      return kNumeric;
    } catch (const IoError &e) {
      std::cerr << "error: " << e.what() << '\n';
      return kIo;
    } catch (const NumericError &e) {
      std::cerr << "error: " << e.what() << '\n';
      return kNumeric;
    } catch (const std::invalid_argument &e) {
      std::cerr << "error: " << e.what() << '\n';
      return kUsage;
    } catch (const std::domain_error &e) {
      std::cerr << "error: " << e.what() << '\n';
      return kUsage;
    } catch (const std::exception &e) {
      std::cerr << "error: " << e.what() << '\n';
      return kIo;
    }
  }
  return kUsage;
}
