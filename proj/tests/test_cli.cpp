// SPDX-License-Identifier: Apache-2.0
// Runs the piann executable end to end.
#include <piann/checkpoint.hpp>
#include <piann/csv.hpp>

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace piann;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "piann_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run run(const std::string &args) {
  const fs::path log = work_dir() / "stdout.txt";
  const std::string cmd = std::string("cd ") + work_dir().string() + " && " + PIANN_CLI +
                          " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::vector<std::uint8_t> bytes_of(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const std::string kTiny = "--dx 0.25 --dt 0.1 --t-max 0.3 --m-list 2,10 --hidden 3 --lr 0.01";

} // namespace

TEST_CASE("analytic writes one row per grid node with the boundary at 1") {
  const Run r = run("analytic --m 2 --dx 0.01 --dt 0.01 --t-max 0.5 --out a.csv");
  CHECK(r.code == 0);
  CHECK(r.out.find("# piann analytic") == 0);
  const CsvTable t = load_csv(work_dir() / "a.csv");
  CHECK(t.header == std::vector<std::string>{"M", "t", "x", "u_exact"});
  CHECK(t.rows.size() == 101 * 51);
  for (const auto &row : t.rows)
    if (row[2] == 0.0)
      CHECK(row[3] == 1.0);
}

TEST_CASE("usage errors exit with 1") {
  CHECK(run("analytic --m -3").code == 1);
  CHECK(run("analytic --m 2 --dx 0.03").code == 1);
  CHECK(run("").code == 1);
  CHECK(run("train --scorer dot --epochs 0").code == 1);
  CHECK(run("analytic --no-such-flag 1").code == 1);
  CHECK(run("--help").code == 0);
}

TEST_CASE("missing checkpoints and unwritable outputs exit with 2") {
  CHECK(run("eval --checkpoint missing.ckpt").code == 2);
  CHECK(run("attention --checkpoint missing.ckpt").code == 2);
  CHECK(run("compare --central missing.ckpt --upwind missing.ckpt").code == 2);
  CHECK(run("analytic --m 2 --out /nonexistent/dir/a.csv").code == 2);
}

TEST_CASE("fv places the M = 2 shock near 0.5464 at t = 0.4") {
  const Run r = run("fv --m 2 --dx 0.0025 --dt 0.1 --t-max 0.4 --out fv.csv --svg fv.svg");
  REQUIRE(r.code == 0);
  const auto pos = r.out.find("shock_fv=");
  REQUIRE(pos != std::string::npos);
  const double shock = std::stod(r.out.substr(pos + 9));
  CHECK(std::abs(shock - 0.5464101615) <= 2 * 0.0025);
  CHECK(fs::exists(work_dir() / "fv.svg"));
}

TEST_CASE("train prints per-epoch lines and is reproducible") {
  const Run a = run("train " + kTiny + " --epochs 3 --seed 1 --checkpoint a.ckpt --log a.csv");
  REQUIRE(a.code == 0);
  CHECK(a.out.find("epoch=0 loss=") != std::string::npos);
  CHECK(a.out.find("epoch=2 loss=") != std::string::npos);
  const Run b = run("train " + kTiny + " --epochs 3 --seed 1 --checkpoint b.ckpt --log b.csv");
  REQUIRE(b.code == 0);
  CHECK(bytes_of(work_dir() / "a.ckpt") == bytes_of(work_dir() / "b.ckpt"));
  CHECK(load_csv(work_dir() / "a.csv").rows.size() == 3);
}

TEST_CASE("train with zero epochs writes an initialized checkpoint and empty log") {
  const Run r = run("train " + kTiny + " --epochs 0 --checkpoint z.ckpt --log z.csv");
  REQUIRE(r.code == 0);
  CHECK(load_checkpoint(work_dir() / "z.ckpt").epoch == 0);
  const CsvTable log = load_csv(work_dir() / "z.csv");
  CHECK(log.header == std::vector<std::string>{"epoch", "loss", "seconds"});
  CHECK(log.rows.empty());
}

TEST_CASE("config file values are overridden by flags") {
  {
    std::ofstream cfg(work_dir() / "run.ini");
    cfg << "# tiny run\ndx = 0.25\ndt = 0.1\nt-max = 0.3\nm-list = 2,10\nhidden = 3\n"
        << "epochs = 5\nseed = 4\n";
  }
  const Run r = run("train --config run.ini --epochs 1 --checkpoint c.ckpt --log c.csv");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("epochs=1") != std::string::npos);
  CHECK(r.out.find("m_values=2,10") != std::string::npos);
  CHECK(r.out.find("hidden=3") != std::string::npos);
  const TrainState s = load_checkpoint(work_dir() / "c.ckpt");
  CHECK(s.epoch == 1);
  CHECK(s.config.seed == 4);
}

TEST_CASE("m-range expands start:step:end") {
  const Run r = run("analytic --m-range 2:2:10 --dx 0.25 --dt 0.25 --t-max 0.5 --out r.csv");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("m_values=2,4,6,8,10") != std::string::npos);
  CHECK(load_csv(work_dir() / "r.csv").rows.size() == 5 * 5 * 3);
}

TEST_CASE("eval, attention, compare and resolution on a tiny checkpoint") {
  REQUIRE(run("train " + kTiny + " --epochs 2 --checkpoint e.ckpt --log e.csv").code == 0);
  const Run ev = run("eval --checkpoint e.ckpt --m-list 4.5,500 --out p.csv --svg p.svg");
  REQUIRE(ev.code == 0);
  const CsvTable p = load_csv(work_dir() / "p.csv");
  CHECK(p.header == std::vector<std::string>{"M", "t", "x", "u_pred", "u_exact"});
  CHECK(p.rows.size() == 2 * 3 * 5);
  for (const auto &row : p.rows)
    CHECK(std::isfinite(row[3]));

  const Run at = run("attention --checkpoint e.ckpt --m 2 --t 0.2 --out al.csv --svg al.svg");
  REQUIRE(at.code == 0);
  CHECK(load_csv(work_dir() / "al.csv").rows.size() == 16);
  CHECK(at.out.find("mean_entropy=") != std::string::npos);

  const Run cmp = run("compare --central e.ckpt --upwind e.ckpt --m 2 --out s.csv");
  REQUIRE(cmp.code == 0);
  CHECK(cmp.out.find("linf_central_upwind=0") != std::string::npos);

  const Run res = run("resolution " + kTiny +
                      " --epochs 1 --m 4.5 --resolutions 0.25:0.1,0.125:0.05 --out res.csv");
  REQUIRE(res.code == 0);
  CHECK(load_csv(work_dir() / "res.csv").rows.size() == 2);
}

TEST_CASE("numerical aborts exit with 3") {
  REQUIRE(run("train " + kTiny + " --epochs 0 --checkpoint nan.ckpt --log n.csv").code == 0);
  TrainState s = load_checkpoint(work_dir() / "nan.ckpt");
  s.model.params().at("readout.bias")[0] = std::nan("");
  s.config.epochs = 0;
  save_checkpoint(work_dir() / "nan.ckpt", s);
  CHECK(run("train " + kTiny + " --epochs 2 --resume --checkpoint nan.ckpt --log n.csv").code ==
        3);
}
