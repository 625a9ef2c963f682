#include "catch_amalgamated.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fracest/classical/estimators.hpp"
#include "fracest/cli/commands.hpp"
#include "fracest/cli/config.hpp"
#include "fracest/cli/ingest.hpp"
#include "fracest/generators/trajectory_io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace fracest;
using namespace fracest::cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path& scratch() {
  static const fs::path dir = oracle::temp_dir("fracest_cli_test");
  return dir;
}

Result run_cli(const std::string& args) {
  const auto out = scratch() / "stdout.txt";
  const auto err = scratch() / "stderr.txt";
  const std::string cmd =
      std::string("'") + FRACEST_CLI_PATH + "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

std::string echoed_config(const std::string& stdout_text) {
  const auto b = stdout_text.find("# resolved configuration\n");
  const auto e = stdout_text.find("# end configuration\n");
  REQUIRE(b != std::string::npos);
  REQUIRE(e != std::string::npos);
  return stdout_text.substr(b, e + 20 - b);
}

std::vector<fs::path> files_in(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path().filename());
  std::sort(out.begin(), out.end());
  return out;
}

void require_same_dirs(const fs::path& a, const fs::path& b) {
  const auto fa = files_in(a);
  REQUIRE(fa == files_in(b));
  for (const auto& f : fa) {
    INFO(f.string());
    if (f == "run.cfg") {
      // out and prefetch may differ between the two runs
      auto strip = [](const std::string& t) {
        std::istringstream in(t);
        std::string line, kept;
        while (std::getline(in, line)) {
          if (!line.starts_with("out = ") && !line.starts_with("prefetch = ")) kept += line + '\n';
        }
        return kept;
      };
      CHECK(strip(slurp(a / f)) == strip(slurp(b / f)));
    } else {
      CHECK(slurp(a / f) == slurp(b / f));
    }
  }
}

const std::string kTinyTrain =
    "train --hidden 8 --head1 8 --head2 4 --n 40 --sequences-per-epoch 96 --val-sequences 32 --lr 0.01 --seed 3";

}  // namespace

TEST_CASE("help documents every flag") {
  for (auto c : {Command::generate, Command::train, Command::estimate, Command::evaluate}) {
    const auto r = run_cli(std::string(to_string(c)) + " --help");
    CHECK(r.code == 0);
    for (const auto& k : key_schema()) {
      if (k.commands & bit(c)) CHECK(r.out.find("--" + k.name) != std::string::npos);
    }
  }
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("generate --bogus 1").code == kExitValidation);
  CHECK(run_cli("").code == kExitValidation);
  const auto bad_h = run_cli("generate --hurst 1.5 --out " + q(scratch() / "x.frtj"));
  CHECK(bad_h.code == kExitValidation);
  CHECK(bad_h.err.starts_with("error: "));
  CHECK(run_cli("generate --process lfsm --hurst uniform --out " + q(scratch() / "x.frtj")).code == kExitValidation);
  CHECK(run_cli("generate --process lfsm --alpha 1.25 --hurst 0.8 --n 10 --out " + q(scratch() / "x.frtj")).code ==
        kExitValidation);
  CHECK(run_cli("generate --n abc").code == kExitValidation);
  CHECK(run_cli("estimate --estimator wavelet --input x").code == kExitValidation);
}

TEST_CASE("numerical failures exit with code 3") {
  const auto r = run_cli("generate --process fou --hurst 0.5 --kappa 10 --dt 0.5 --n 10 --count 2 --out " +
                         q(scratch() / "fou.frtj"));
  CHECK(r.code == kExitNumerical);
  CHECK(r.err.find("failed") != std::string::npos);
}

TEST_CASE("generate writes reproducible files for every thread count") {
  const auto a = scratch() / "a.frtj";
  const auto b = scratch() / "b.frtj";
  const auto base = "generate --process fbm --hurst uniform --n 300 --count 50 --seed 7";
  REQUIRE(run_cli(std::string(base) + " --threads 1 --out " + q(a)).code == 0);
  const auto r = run_cli(std::string(base) + " --threads 3 --out " + q(b));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("throughput:") != std::string::npos);
  CHECK(slurp(a) == slurp(b));
  const auto batch = load_trajectories_binary(a.string());
  REQUIRE(batch.size() == 50);
  CHECK(batch[0].size() == 300);

  // A batch split across first-index ranges concatenates to the same paths.
  const auto c = scratch() / "c.frtj";
  REQUIRE(run_cli("generate --process fbm --hurst uniform --n 300 --count 20 --seed 7 --first-index 30 --out " + q(c))
              .code == 0);
  const auto tail = load_trajectories_binary(c.string());
  CHECK(tail[0] == batch[30]);
}

TEST_CASE("generate fOU, lfsm and CSV output") {
  const auto fou = scratch() / "fou.frtj";
  REQUIRE(run_cli("generate --process fou --hurst 0.7 --kappa 1.0 --theta 0 --sigma 1 --n 400 --count 3 --dt 0.01 "
                  "--out " + q(fou))
              .code == 0);
  const auto f = load_trajectories_binary(fou.string());
  CHECK(std::get<FouParams>(*f[0].meta.params).kappa == 1.0);
  CHECK(f[0].dt == 0.01);

  const auto lfsm = scratch() / "lfsm.csv";
  REQUIRE(run_cli("generate --process lfsm --alpha 1.5 --hurst 0.8 --n 64 --count 2 --lfsm-truncation 50 "
                  "--lfsm-refinement 16 --format csv --out " + q(lfsm))
              .code == 0);
  const auto set = ingest_series(lfsm.string());
  REQUIRE(set.series.size() == 2);
  CHECK(set.series[0].size() == 64);
  CHECK(set.true_hurst[1] == 0.8);
}

TEST_CASE("config echo replays the run byte for byte") {
  const auto path = scratch() / "echo.frtj";
  const auto first = run_cli("generate --hurst 0.3 --n 100 --count 5 --seed 11 --threads 2 --out " + q(path));
  REQUIRE(first.code == 0);
  const auto bytes = slurp(path);
  const auto cfg = scratch() / "echo.cfg";
  write_file(cfg, echoed_config(first.out));
  fs::remove(path);

  const auto replay = run_cli("--config " + q(cfg));
  REQUIRE(replay.code == 0);
  CHECK(slurp(path) == bytes);
  CHECK(echoed_config(replay.out) == echoed_config(first.out));

  const auto sub = run_cli("generate --config " + q(cfg) + " --threads 1");
  REQUIRE(sub.code == 0);
  CHECK(slurp(path) == bytes);
}

TEST_CASE("config files reject unknown, duplicate and misplaced keys") {
  std::istringstream ok("# comment\ncommand = generate\nn = 10  # trailing\n\nseed=4\n");
  const auto c = parse_config(ok);
  CHECK(c.command == "generate");
  REQUIRE(c.entries.size() == 2);
  CHECK(c.entries[0].second == "10");

  std::istringstream unknown("bogus = 1\n");
  CHECK_THROWS_WITH(parse_config(unknown, "f.cfg"), Catch::Matchers::ContainsSubstring("f.cfg:1: unknown key"));
  std::istringstream dup("n = 1\nn = 2\n");
  CHECK_THROWS_WITH(parse_config(dup), Catch::Matchers::ContainsSubstring("duplicate key"));
  std::istringstream junk("just words\n");
  CHECK_THROWS_AS(parse_config(junk), ValidationError);

  RunConfig g(Command::generate);
  CHECK_THROWS_AS(g.set("epochs", "3"), ValidationError);
  CHECK_THROWS_AS(g.set("nope", "3"), ValidationError);
  g.set("n", "12");
  CHECK(g.size("n") == 12);
  CHECK(g.str("process") == "fbm");
  g.set("n", "1.5");
  CHECK_THROWS_AS(g.size("n"), ValidationError);

  const auto bad = scratch() / "bad.cfg";
  write_file(bad, "command = generate\nepochs = 3\n");
  CHECK(run_cli("--config " + q(bad)).code == kExitValidation);
  CHECK(run_cli("--config " + q(scratch() / "missing.cfg")).code == kExitIo);
}

TEST_CASE("run.cfg omits threads") {
  std::ostringstream a, b;
  RunConfig cfg(Command::evaluate);
  cfg.set("threads", "8");
  cfg.write(a, false);
  cfg.write(b, true);
  CHECK(a.str().find("threads") == std::string::npos);
  CHECK(b.str().find("threads = 8") != std::string::npos);
  CHECK(a.str().starts_with("command = evaluate\nprocess = fbm\n"));
}

TEST_CASE("series ingestion") {
  {
    std::istringstream in("1,2,3,4\n5,6,7,8\n");
    const auto s = ingest_series(in);
    REQUIRE(s.series.size() == 2);
    CHECK(s.series[1] == std::vector<double>{5, 6, 7, 8});
    CHECK(s.header.empty());
  }
  {
    std::istringstream in("value\n1.5\n2.5\n-3e-2\n");
    const auto s = ingest_series(in);
    REQUIRE(s.series.size() == 1);
    CHECK(s.series[0] == std::vector<double>{1.5, 2.5, -0.03});
    CHECK(s.header == std::vector<std::string>{"value"});
  }
  {
    std::istringstream in("1,2,3\n4,NA,6\n");
    try {
      ingest_series(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.row() == 2);
      CHECK(e.column() == 2);
      CHECK(std::string(e.what()).find("'NA'") != std::string::npos);
    }
  }
  {
    std::istringstream in("1,2,3\n4,,6\n");
    CHECK_THROWS_WITH(ingest_series(in), Catch::Matchers::ContainsSubstring("blank cell (row 2, column 2)"));
  }
  {
    std::istringstream in("\n\n");
    CHECK_THROWS_AS(ingest_series(in), ParseError);
  }
  {
    std::istringstream in("index,true_H,v0,v1,v2\n0,0.25,0,1,2\n1,nan,0,2,1\n");
    const auto s = ingest_series(in);
    REQUIRE(s.series.size() == 2);
    CHECK(s.series[0] == std::vector<double>{0, 1, 2});
    CHECK(s.true_hurst[0] == 0.25);
    CHECK(std::isnan(s.true_hurst[1]));
  }
}

TEST_CASE("estimate on the bundled battery series") {
  const std::string data = std::string(FRACEST_DATA_DIR) + "/battery_capacity_reconstructed.csv";
  const auto dir = scratch() / "battery";
  const auto r = run_cli("estimate --estimator madogram,higuchi --ci-abs 0.1280 --ci-rel 8.78 --input " + q(data) +
                         " --out " + q(dir));
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir / "estimates.csv");
  CHECK(r.out.find(csv) != std::string::npos);

  // Oracle: the library applied to the ingested column.
  const auto series = ingest_series(data).series.at(0);
  const double mad = classical::madogram(series);
  const double hig = classical::higuchi(series);
  const auto [lo, hi] = eval::confidence_interval(mad, 0.1280);
  const auto [rlo, rhi] = eval::rel_confidence_interval(mad, 8.78);
  std::ostringstream expect;
  expect << "series,estimator,estimate,abs_lo,abs_hi,rel_lo,rel_hi\n"
         << "0,madogram," << format_double(mad) << ',' << format_double(lo) << ',' << format_double(hi) << ','
         << format_double(rlo) << ',' << format_double(rhi) << '\n';
  CHECK(csv.starts_with(expect.str()));
  CHECK(csv.find("\n0,higuchi," + format_double(hig) + ",") != std::string::npos);
  CHECK(slurp(dir / "run.cfg").find("estimator = madogram,higuchi") != std::string::npos);
}

TEST_CASE("estimate reports degenerate and malformed input") {
  const auto flat = scratch() / "flat.csv";
  write_file(flat, std::string("x\n") + [] {
    std::string s;
    for (int i = 0; i < 200; ++i) s += "1.0\n";
    return s;
  }());
  const auto r = run_cli("estimate --estimator higuchi --input " + q(flat) + " --out " + q(scratch() / "flat"));
  CHECK(r.code == kExitNumerical);
  CHECK(r.err.find("constant") != std::string::npos);

  const auto na = scratch() / "na.csv";
  write_file(na, "1,2,3\n4,NA,6\n");
  const auto p = run_cli("estimate --estimator higuchi --input " + q(na) + " --out " + q(scratch() / "na"));
  CHECK(p.code == kExitIo);
  CHECK(p.err.find("row 2, column 2") != std::string::npos);

  CHECK(run_cli("estimate --estimator higuchi --input " + q(scratch() / "absent.csv") + " --out " +
                q(scratch() / "absent"))
            .code == kExitIo);
  CHECK(run_cli("estimate --model " + q(scratch() / "absent.frhn") + " --input " + q(na)).code == kExitIo);
}

TEST_CASE("evaluate writes reports independent of thread count") {
  const auto a = scratch() / "eval_a";
  const auto b = scratch() / "eval_b";
  const std::string base = "evaluate --estimator higuchi,madogram --process fbm --n 400 --count 150 --seed 3";
  REQUIRE(run_cli(base + " --threads 1 --out " + q(a)).code == 0);
  const auto r = run_cli(base + " --threads 4 --out " + q(b));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("RMSE") != std::string::npos);
  require_same_dirs(a, b);
  for (const char* f : {"report.csv", "report.txt", "pairs_higuchi.jsonl", "localized_madogram.csv",
                        "diagnostics.csv", "hist_abs_errors_higuchi.csv", "run.cfg"}) {
    CHECK(fs::exists(a / f));
  }
  const auto report = slurp(a / "report.csv");
  CHECK(report.find("\nhiguchi,150,") != std::string::npos);

  // Saved trajectories evaluate exactly like the generated ones.
  const auto traj = scratch() / "eval.frtj";
  REQUIRE(run_cli("generate --process fbm --hurst uniform --n 400 --count 150 --seed 3 --out " + q(traj)).code == 0);
  const auto c = scratch() / "eval_c";
  REQUIRE(run_cli("evaluate --estimator higuchi,madogram --input " + q(traj) + " --out " + q(c)).code == 0);
  CHECK(slurp(c / "report.csv") == report);
}

TEST_CASE("train, reload and evaluate a tiny model") {
  const auto a = scratch() / "train_a";
  const auto b = scratch() / "train_b";
  const auto r = run_cli(kTinyTrain + " --epochs 2 --threads 1 --prefetch 1 --out " + q(a));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("epoch 2/2") != std::string::npos);
  REQUIRE(run_cli(kTinyTrain + " --epochs 2 --threads 3 --out " + q(b)).code == 0);
  require_same_dirs(a, b);
  for (const char* f : {"model.frhn", "model_best.frhn", "model_final.frhn", "loss_history.csv", "run.cfg"}) {
    CHECK(fs::exists(a / f));
  }

  // Shorter runs follow the start of longer ones.
  const auto longer = scratch() / "train_long";
  REQUIRE(run_cli(kTinyTrain + " --epochs 4 --out " + q(longer)).code == 0);
  std::istringstream h2(slurp(a / "loss_history.csv")), h4(slurp(longer / "loss_history.csv"));
  std::string l2, l4;
  int lines = 0;
  while (std::getline(h2, l2)) {
    REQUIRE(std::getline(h4, l4));
    CHECK(l2 == l4);
    ++lines;
  }
  CHECK(lines == 3);

  const auto model = (a / "model.frhn").string();
  const auto e1 = scratch() / "model_eval_1";
  const auto e2 = scratch() / "model_eval_2";
  const std::string eval = "evaluate --model " + q(model) + " --process fou --kappa 0.5 --dt 0.1 --n 60 --count 120";
  REQUIRE(run_cli(eval + " --threads 1 --out " + q(e1)).code == 0);
  REQUIRE(run_cli(eval + " --threads 2 --out " + q(e2)).code == 0);
  require_same_dirs(e1, e2);
  CHECK(slurp(e1 / "report.csv").find("\nlstm:model,120,") != std::string::npos);

  const auto m = scratch() / "matrix";
  const auto mr = run_cli("evaluate --matrix --model " + q(model) + "," + q(scratch() / "nope.frhn") +
                          " --train-lengths 40,99 --eval-lengths 20,80 --count 50 --out " + q(m));
  REQUIRE(mr.code == 0);
  const auto grid = slurp(m / "matrix.csv");
  CHECK(grid.starts_with("train_length,20,80\n40,"));
  CHECK(grid.ends_with("\n99,NA,NA\n"));
  CHECK(mr.out.find("warning: model") != std::string::npos);

  const auto series = scratch() / "series.csv";
  write_file(series, "0,1,0.5,2,1.5,1,2.5,3,2,4\n0,-1,-0.5,-2,-1,-3,-2.5,-4,-3,-5\n");
  const auto est = run_cli("estimate --model " + q(model) + " --input " + q(series) + " --out " +
                           q(scratch() / "model_est"));
  REQUIRE(est.code == 0);
  CHECK(est.out.find("\n1,lstm:model,") != std::string::npos);
}

TEST_CASE("exit code mapping") {
  CHECK(exit_code_for(ValidationError("x")) == 2);
  CHECK(exit_code_for(DegenerateInputError("x")) == 3);
  CHECK(exit_code_for(DivergenceError("x")) == 3);
  CHECK(exit_code_for(CorruptFileError("x")) == 4);
  CHECK(exit_code_for(ParseError("x", 1, 1)) == 4);
  CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("default output directories carry the seed") {
  const auto d = default_run_dir(42);
  CHECK(d.starts_with("runs/"));
  CHECK(d.ends_with("-42"));
  RunConfig cfg(Command::generate);
  cfg.set("seed", "9");
  resolve(cfg);
  CHECK(cfg.str("out").ends_with("-9/trajectories.frtj"));
}
