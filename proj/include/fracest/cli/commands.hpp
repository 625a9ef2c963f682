#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fracest/classical/estimators.hpp"
#include "fracest/cli/config.hpp"
#include "fracest/cli/ingest.hpp"
#include "fracest/core/errors.hpp"
#include "fracest/core/params.hpp"
#include "fracest/detail/parallel.hpp"
#include "fracest/eval/benchmark.hpp"
#include "fracest/eval/emit.hpp"
#include "fracest/eval/metrics.hpp"
#include "fracest/generators/batch.hpp"
#include "fracest/generators/trajectory_io.hpp"
#include "fracest/neural/estimate.hpp"
#include "fracest/neural/serialize.hpp"
#include "fracest/neural/train.hpp"

namespace fracest::cli {

namespace fs = std::filesystem;

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitValidation = 2, kExitNumerical = 3, kExitIo = 4 };

inline std::string default_run_dir(std::uint64_t seed) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream os;
  os << "runs/" << std::put_time(&tm, "%Y%m%d-%H%M%S") << '-' << seed;
  return os.str();
}

inline std::uint64_t run_seed(const RunConfig& cfg) {
  return find_key("seed") && (find_key("seed")->commands & bit(cfg.command())) ? cfg.u64("seed") : 0;
}

/// Fills the values that depend on the environment (output location) so the
/// echoed configuration replays the same run.
inline void resolve(RunConfig& cfg) {
  if (cfg.command() == Command::generate) {
    if (!cfg.has("out")) {
      const std::string ext = cfg.str("format") == "csv" ? "csv" : "frtj";
      cfg.set("out", default_run_dir(cfg.u64("seed")) + "/trajectories." + ext);
    }
  } else if (!cfg.has("out")) {
    cfg.set("out", default_run_dir(run_seed(cfg)));
  }
}

inline void echo_config(const RunConfig& cfg, std::ostream& out) {
  out << "# resolved configuration\n";
  cfg.write(out, true);
  out << "# end configuration\n";
}

inline void write_run_cfg(const RunConfig& cfg, const fs::path& dir) {
  std::ofstream f(dir / "run.cfg");
  if (!f) throw IoError("cannot write " + (dir / "run.cfg").string());
  cfg.write(f, false);
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

inline std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  return f;
}

inline FouScheme parse_fou_scheme(const std::string& s) {
  if (s == "euler") return FouScheme::euler_maruyama;
  if (s == "exact") return FouScheme::exact_quadrature;
  throw ValidationError("unknown fou-scheme '" + s + "' (expected euler or exact)");
}

/// Process parameters with the configured H (0.5 placeholder for uniform H).
inline ProcessParams process_params(const RunConfig& cfg) {
  const std::string hs = cfg.str("hurst");
  const double h = hs == "uniform" ? 0.5 : cfg.real("hurst");
  switch (parse_process_kind(cfg.str("process"))) {
    case ProcessKind::fbm: return FbmParams{h};
    case ProcessKind::fou:
      return FouParams{h, cfg.real("kappa"), cfg.real("theta"), cfg.real("sigma"), cfg.real("x0")};
    case ProcessKind::lfsm: return LfsmParams{h, cfg.real("alpha"), cfg.real("scale")};
  }
  throw ValidationError("unknown process");
}

inline GenerationRequest generation_request(const RunConfig& cfg) {
  GenerationRequest req;
  req.params = process_params(cfg);
  req.hurst_mode = cfg.str("hurst") == "uniform" ? HurstMode::uniform : HurstMode::fixed;
  req.n = cfg.size("n");
  req.count = cfg.size("count");
  req.master_seed = cfg.u64("seed");
  req.dt = cfg.real("dt");
  req.fou_scheme = parse_fou_scheme(cfg.str("fou-scheme"));
  req.lfsm_mesh = {cfg.size("lfsm-truncation"), cfg.size("lfsm-refinement")};
  req.threads = cfg.u32("threads");
  if (cfg.command() == Command::generate) req.first_index = cfg.u64("first-index");
  if (req.hurst_mode == HurstMode::uniform && kind_of(req.params) == ProcessKind::lfsm) {
    throw ValidationError("lfsm needs a fixed hurst (H = 1/alpha is excluded)");
  }
  validate_request(req);
  return req;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const auto req = generation_request(cfg);
  const std::string format = cfg.str("format");
  if (format != "binary" && format != "csv") throw ValidationError("format must be binary or csv");
  const fs::path path = cfg.str("out");
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  auto file = open_out(path, format == "binary");

  const auto t0 = std::chrono::steady_clock::now();
  if (format == "binary") write_trajectory_header(file, req.n, req.count, kind_of(req.params));
  else write_trajectory_csv_header(file, req.n);
  constexpr std::size_t kChunk = 4096;
  for (std::size_t done = 0; done < req.count; done += kChunk) {
    GenerationRequest part = req;
    part.first_index = req.first_index + done;
    part.count = std::min(kChunk, req.count - done);
    for (const auto& t : generate_batch(part)) {
      if (format == "binary") write_trajectory_record(file, t);
      else write_trajectory_csv_row(file, t);
    }
  }
  file.close();
  if (!file) throw IoError("failed writing '" + path.string() + "'");
  const double secs = seconds_since(t0);
  out << "wrote " << req.count << " paths of length " << req.n << " to " << path.string() << '\n';
  out << "throughput: " << std::fixed << std::setprecision(1) << static_cast<double>(req.count) / secs
      << " paths/s (" << std::setprecision(3) << secs << " s)\n";
}

inline neural::TrainConfig train_config(const RunConfig& cfg) {
  neural::TrainConfig t;
  t.optimizer = {cfg.real("lr"), cfg.real("weight-decay"), cfg.real("beta1"), cfg.real("beta2"), cfg.real("eps")};
  t.loss = neural::parse_loss_kind(cfg.str("loss"));
  t.epochs = cfg.u32("epochs");
  t.sequences_per_epoch = cfg.size("sequences-per-epoch");
  t.train_batch = cfg.size("train-batch");
  t.val_batch = cfg.size("val-batch");
  t.val_sequences = cfg.size("val-sequences");
  t.sequence_length = cfg.size("n");
  t.process = parse_process_kind(cfg.str("process"));
  t.fou = {0.5, cfg.real("kappa"), cfg.real("theta"), cfg.real("sigma"), cfg.real("x0")};
  t.fou_scheme = parse_fou_scheme(cfg.str("fou-scheme"));
  t.dt = cfg.real("dt");
  t.seed = cfg.u64("seed");
  t.arch = {1, cfg.u32("layers"), cfg.u32("hidden"), cfg.u32("head1"), cfg.u32("head2")};
  t.threads = cfg.u32("threads");
  t.prefetch_depth = cfg.size("prefetch");
  neural::validate(t);
  return t;
}

inline void cmd_train(const RunConfig& cfg, std::ostream& out) {
  const auto tc = train_config(cfg);
  const std::string which = cfg.str("weights");
  if (which != "best" && which != "final") throw ValidationError("weights must be best or final");
  const fs::path dir = cfg.str("out");
  ensure_dir(dir);
  write_run_cfg(cfg, dir);

  const auto t0 = std::chrono::steady_clock::now();
  auto result = neural::train<float>(tc, [&](const neural::EpochLoss& e) {
    out << "epoch " << e.epoch << "/" << tc.epochs << "  train " << std::setprecision(6) << e.train_loss
        << "  val " << e.val_loss;
    if (e.skipped_steps) out << "  skipped " << e.skipped_steps;
    out << "  (" << std::fixed << std::setprecision(1) << seconds_since(t0) << " s)" << std::defaultfloat
        << std::endl;
  });
  const double secs = seconds_since(t0);

  neural::save_model((dir / "model.frhn").string(), which == "best" ? result.best : result.final);
  neural::save_model((dir / "model_final.frhn").string(), result.final);
  neural::save_model((dir / "model_best.frhn").string(), result.best);
  auto hist = open_out(dir / "loss_history.csv");
  neural::write_loss_history_csv(hist, result.history, tc.loss);
  const double seqs = static_cast<double>(tc.epochs) * static_cast<double>(tc.sequences_per_epoch);
  out << "best epoch " << result.best_epoch << "; wrote " << (dir / "model.frhn").string() << '\n';
  out << "throughput: " << std::fixed << std::setprecision(1) << seqs / secs << " training sequences/s ("
      << secs << " s)\n";
}

/// A named estimator applicable to a list of paths.
struct NamedEstimator {
  std::string label;
  eval::BatchEstimator run;
};

inline classical::EstimatorConfig classical_config(const RunConfig& cfg) {
  classical::EstimatorConfig c;
  c.higuchi.k_max = cfg.size("higuchi-kmax");
  if (cfg.command() == Command::estimate) {
    const auto kind = cfg.str("input-kind");
    if (kind == "level") c.input = classical::InputKind::level;
    else if (kind == "increments") c.input = classical::InputKind::increments;
    else throw ValidationError("input-kind must be level or increments");
  }
  return c;
}

inline eval::BatchEstimator classical_runner(classical::EstimatorKind kind, classical::EstimatorConfig c,
                                             unsigned threads) {
  return [kind, c, threads](std::span<const std::vector<double>> paths) {
    std::vector<double> est(paths.size());
    parallel_for(paths.size(), threads, [&](std::size_t i) { est[i] = classical::estimate(kind, paths[i], c); });
    return est;
  };
}

inline eval::BatchEstimator model_runner(std::shared_ptr<const neural::Model<float>> model, bool increments,
                                         unsigned threads) {
  return [model, increments, threads](std::span<const std::vector<double>> paths) {
    if (!increments) return neural::estimate_batch(*model, paths, threads);
    std::vector<std::vector<double>> levels;
    for (const auto& p : paths) {
      std::vector<double> x(p.size() + 1, 0.0);
      for (std::size_t i = 0; i < p.size(); ++i) x[i + 1] = x[i] + p[i];
      levels.push_back(std::move(x));
    }
    return neural::estimate_batch(*model, std::span<const std::vector<double>>(levels), threads);
  };
}

inline std::string model_label(const std::string& path) { return "lstm:" + fs::path(path).stem().string(); }

/// Estimators requested by `estimator` and `model`, in that order.
inline std::vector<NamedEstimator> requested_estimators(const RunConfig& cfg) {
  std::vector<NamedEstimator> out;
  const auto ccfg = classical_config(cfg);
  const unsigned threads = cfg.u32("threads");
  for (const auto& name : cfg.list("estimator")) {
    const auto kind = classical::parse_estimator(name);
    out.push_back({std::string(classical::to_string(kind)), classical_runner(kind, ccfg, threads)});
  }
  const bool increments = ccfg.input == classical::InputKind::increments;
  for (const auto& path : cfg.list("model")) {
    auto model = std::make_shared<const neural::Model<float>>(neural::load_model(path));
    out.push_back({model_label(path), model_runner(std::move(model), increments, threads)});
  }
  if (out.empty()) throw ValidationError("give --estimator and/or --model");
  return out;
}

inline void cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.has("input")) throw ValidationError("estimate needs --input");
  const auto estimators = requested_estimators(cfg);
  const auto data = ingest_series(cfg.str("input"));
  const std::optional<double> ci_abs = cfg.has("ci-abs") ? std::optional(cfg.real("ci-abs")) : std::nullopt;
  const std::optional<double> ci_rel = cfg.has("ci-rel") ? std::optional(cfg.real("ci-rel")) : std::nullopt;
  const std::string mode = cfg.str("ci-rel-mode");
  if (mode != "exact" && mode != "symmetric") throw ValidationError("ci-rel-mode must be exact or symmetric");
  const auto inversion = mode == "exact" ? eval::RelInversion::exact : eval::RelInversion::symmetric;

  const fs::path dir = cfg.str("out");
  ensure_dir(dir);
  write_run_cfg(cfg, dir);

  std::ostringstream table;
  table << "series,estimator,estimate";
  if (ci_abs) table << ",abs_lo,abs_hi";
  if (ci_rel) table << ",rel_lo,rel_hi";
  table << '\n';
  std::vector<std::vector<double>> results;
  for (const auto& e : estimators) results.push_back(e.run(data.series));
  for (std::size_t s = 0; s < data.series.size(); ++s) {
    for (std::size_t k = 0; k < estimators.size(); ++k) {
      const double h = results[k][s];
      table << s << ',' << estimators[k].label << ',' << format_double(h);
      if (ci_abs) {
        const auto [lo, hi] = eval::confidence_interval(h, *ci_abs);
        table << ',' << format_double(lo) << ',' << format_double(hi);
      }
      if (ci_rel) {
        const auto [lo, hi] = eval::rel_confidence_interval(h, *ci_rel, inversion);
        table << ',' << format_double(lo) << ',' << format_double(hi);
      }
      table << '\n';
    }
  }
  auto f = open_out(dir / "estimates.csv");
  f << table.str();
  out << table.str();
}

/// Paths and true H values for evaluation: a saved trajectory file, or a
/// generated batch.
inline std::pair<std::vector<std::vector<double>>, std::vector<double>> evaluation_data(const RunConfig& cfg) {
  std::vector<std::vector<double>> paths;
  std::vector<double> truth;
  if (cfg.has("input")) {
    const std::string input = cfg.str("input");
    std::ifstream probe(input, std::ios::binary);
    if (!probe) throw IoError("cannot open input '" + input + "'");
    char magic[4]{};
    probe.read(magic, 4);
    probe.close();
    if (std::string(magic, 4) == kTrajectoryMagic) {
      for (auto& t : load_trajectories_binary(input)) {
        const auto h = t.meta.true_hurst();
        if (!h) throw ValidationError("trajectory " + std::to_string(t.meta.index) + " has no true H");
        truth.push_back(*h);
        paths.push_back(std::move(t.values));
      }
    } else {
      auto set = ingest_series(input);
      if (set.true_hurst.size() != set.series.size()) {
        throw ValidationError("evaluation input needs true H values (trajectory CSV or binary file)");
      }
      paths = std::move(set.series);
      truth = std::move(set.true_hurst);
    }
    return {std::move(paths), std::move(truth)};
  }
  const auto req = generation_request(cfg);
  constexpr std::size_t kChunk = 4096;
  for (std::size_t done = 0; done < req.count; done += kChunk) {
    GenerationRequest part = req;
    part.first_index = req.first_index + done;
    part.count = std::min(kChunk, req.count - done);
    for (auto& t : generate_batch(part)) {
      truth.push_back(*t.meta.true_hurst());
      paths.push_back(std::move(t.values));
    }
  }
  return {std::move(paths), std::move(truth)};
}

inline std::string file_safe(std::string label) {
  for (auto& c : label) {
    if (c == ':' || c == '/' || c == ' ') c = '_';
  }
  return label;
}

inline void cmd_evaluate_matrix(const RunConfig& cfg, std::ostream& out, const fs::path& dir) {
  const auto models = cfg.list("model");
  auto labels = cfg.list("train-lengths");
  if (!labels.empty() && labels.size() != models.size()) {
    throw ValidationError("train-lengths must list one label per model");
  }
  const unsigned threads = cfg.u32("threads");
  std::vector<eval::BenchmarkRow> rows;
  for (std::size_t i = 0; i < models.size(); ++i) {
    eval::BenchmarkRow row;
    if (fs::exists(models[i])) {
      auto model = std::make_shared<const neural::Model<float>>(neural::load_model(models[i]));
      row.label = labels.empty() ? std::to_string(model->meta().sequence_length) : labels[i];
      row.estimator = model_runner(std::move(model), false, threads);
    } else {
      out << "warning: model '" << models[i] << "' not found; row marked absent\n";
      row.label = labels.empty() ? model_label(models[i]) : labels[i];
    }
    rows.push_back(std::move(row));
  }
  const auto ccfg = classical_config(cfg);
  for (const auto& name : cfg.list("estimator")) {
    const auto kind = classical::parse_estimator(name);
    rows.push_back({std::string(classical::to_string(kind)), classical_runner(kind, ccfg, threads)});
  }
  if (rows.empty()) throw ValidationError("matrix mode needs --model and/or --estimator");

  eval::BenchmarkOptions opt;
  opt.paths_per_cell = cfg.size("count");
  opt.seed = cfg.u64("seed");
  opt.threads = threads;
  opt.base = [&] {
    RunConfig probe = cfg;
    probe.set("n", "3");
    return generation_request(probe);
  }();
  const auto lengths = cfg.size_list("eval-lengths");
  const auto m = eval::benchmark_matrix(rows, lengths, opt);
  auto csv = open_out(dir / "matrix.csv");
  eval::write_matrix_csv(csv, m);
  const auto text = eval::format_matrix_text(m);
  auto txt = open_out(dir / "matrix.txt");
  txt << text;
  out << text;
}

inline void cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = cfg.str("out");
  ensure_dir(dir);
  write_run_cfg(cfg, dir);
  if (cfg.boolean("matrix")) {
    cmd_evaluate_matrix(cfg, out, dir);
    return;
  }

  const auto estimators = requested_estimators(cfg);
  const auto [paths, truth] = evaluation_data(cfg);
  const double threshold = cfg.real("rel-threshold");
  const std::size_t bins = cfg.size("bins");

  std::vector<std::pair<std::string, eval::EvalReport>> reports;
  auto diag_csv = open_out(dir / "diagnostics.csv");
  diag_csv << "estimator,jarque_bera,p_value,degenerate\n";
  for (const auto& e : estimators) {
    const auto est = e.run(paths);
    std::vector<eval::EvalPair> pairs(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) pairs[i] = {truth[i], est[i]};
    reports.emplace_back(e.label, eval::compute_report(pairs, threshold));

    const std::string stem = file_safe(e.label);
    auto jsonl = open_out(dir / ("pairs_" + stem + ".jsonl"));
    eval::write_pairs_jsonl(jsonl, pairs);
    eval::LocalizedOptions lopt;
    lopt.rel_threshold = threshold;
    auto loc = open_out(dir / ("localized_" + stem + ".csv"));
    eval::write_localized_csv(loc, eval::localized_rel_quantiles(pairs, lopt));
    if (pairs.size() >= 100) {
      const auto d = eval::error_diagnostics(pairs, bins);
      diag_csv << e.label << ',' << format_double(d.normality.statistic) << ','
               << format_double(d.normality.p_value) << ',' << (d.degenerate ? 1 : 0) << '\n';
      auto he = open_out(dir / ("hist_estimates_" + stem + ".csv"));
      eval::write_histogram_csv(he, d.estimates);
      auto ha = open_out(dir / ("hist_abs_errors_" + stem + ".csv"));
      eval::write_histogram_csv(ha, d.abs_errors);
    }
  }
  auto csv = open_out(dir / "report.csv");
  eval::write_report_csv(csv, reports);
  const auto text = eval::format_report_table(reports);
  auto txt = open_out(dir / "report.txt");
  txt << text;
  out << text;
}

/// Runs a resolved configuration. Progress and results go to `out`.
inline void run(RunConfig cfg, std::ostream& out) {
  resolve(cfg);
  echo_config(cfg, out);
  switch (cfg.command()) {
    case Command::generate: cmd_generate(cfg, out); break;
    case Command::train: cmd_train(cfg, out); break;
    case Command::estimate: cmd_estimate(cfg, out); break;
    case Command::evaluate: cmd_evaluate(cfg, out); break;
  }
}

/// Maps an exception to the documented exit code.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return kExitValidation;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const BatchError*>(&e)) return kExitNumerical;
  return kExitFailure;
}

}  // namespace fracest::cli
