#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fracest/core/errors.hpp"

namespace fracest::cli {

enum class Command { generate, train, estimate, evaluate };

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::generate: return "generate";
    case Command::train: return "train";
    case Command::estimate: return "estimate";
    case Command::evaluate: return "evaluate";
  }
  return "";
}

inline Command parse_command(std::string_view name) {
  for (auto c : {Command::generate, Command::train, Command::estimate, Command::evaluate}) {
    if (to_string(c) == name) return c;
  }
  throw ValidationError("unknown command '" + std::string(name) + "'");
}

/// A recognised configuration key, valid for a set of commands.
struct KeySpec {
  std::string name;
  std::string default_value;  // empty: unset unless given
  std::string help;
  unsigned commands;  // bit (1 << Command)
  bool flag = false;  // boolean switch on the command line
};

inline constexpr unsigned bit(Command c) { return 1u << static_cast<unsigned>(c); }
inline constexpr unsigned kGen = bit(Command::generate), kTrain = bit(Command::train),
                          kEst = bit(Command::estimate), kEval = bit(Command::evaluate);

// Keys in echo order. `threads` never reaches run.cfg: results do not depend on it.
inline const std::vector<KeySpec>& key_schema() {
  static const std::vector<KeySpec> keys = {
      {"process", "fbm", "process: fbm, fou or lfsm (train: fbm or fou)", kGen | kTrain | kEval},
      {"hurst", "uniform", "Hurst exponent in (0,1), or 'uniform' to draw H ~ U(0,1) per path", kGen | kEval},
      {"n", "1600", "path length (train: sequence length)", kGen | kTrain | kEval},
      {"count", "1000", "number of paths (evaluate --matrix: paths per cell)", kGen | kEval},
      {"seed", "0", "master seed", kGen | kTrain | kEval},
      {"first-index", "0", "index of the first generated path", kGen},
      {"dt", "1", "time step", kGen | kTrain | kEval},
      {"kappa", "1", "fOU mean-reversion rate (>= 0)", kGen | kTrain | kEval},
      {"theta", "0", "fOU long-run mean", kGen | kTrain | kEval},
      {"sigma", "1", "fOU volatility (> 0)", kGen | kTrain | kEval},
      {"x0", "0", "fOU initial value", kGen | kTrain | kEval},
      {"fou-scheme", "euler", "fOU discretisation: euler or exact", kGen | kTrain | kEval},
      {"alpha", "1.5", "lfsm stability index in (0,2]", kGen | kEval},
      {"scale", "1", "lfsm scale (> 0)", kGen | kEval},
      {"lfsm-truncation", "600", "lfsm kernel truncation in time units", kGen | kEval},
      {"lfsm-refinement", "256", "lfsm mesh points per time unit", kGen | kEval},
      {"format", "binary", "trajectory output format: binary or csv", kGen},
      {"epochs", "25", "training epochs", kTrain},
      {"sequences-per-epoch", "100000", "fresh training sequences per epoch", kTrain},
      {"train-batch", "32", "training batch size", kTrain},
      {"val-batch", "128", "validation batch size", kTrain},
      {"val-sequences", "2048", "fresh validation sequences per epoch", kTrain},
      {"lr", "0.0001", "AdamW learning rate", kTrain},
      {"weight-decay", "0.01", "AdamW decoupled weight decay", kTrain},
      {"beta1", "0.9", "AdamW beta1", kTrain},
      {"beta2", "0.999", "AdamW beta2", kTrain},
      {"eps", "1e-08", "AdamW epsilon", kTrain},
      {"loss", "mse", "training loss: mse or mae", kTrain},
      {"layers", "2", "LSTM layers", kTrain},
      {"hidden", "128", "LSTM hidden size", kTrain},
      {"head1", "128", "first head layer width", kTrain},
      {"head2", "64", "second head layer width", kTrain},
      {"weights", "best", "weights written to model.frhn: best (lowest validation loss) or final", kTrain},
      {"prefetch", "4", "batches generated ahead of the optimizer", kTrain},
      {"estimator", "", "comma-separated estimators: higuchi, madogram, variogram, rs, dfa, whittle",
       kEst | kEval},
      {"model", "", "model file (.frhn); comma-separated in matrix mode", kEst | kEval},
      {"input", "", "input series CSV (estimate) or trajectory file (evaluate)", kEst | kEval},
      {"input-kind", "level", "series are levels (paths) or increments", kEst},
      {"higuchi-kmax", "10", "largest Higuchi lag", kEst | kEval},
      {"ci-abs", "", "absolute-error quantile q: print the interval est -+ q", kEst},
      {"ci-rel", "", "relative-error quantile in percent: print the inverted interval", kEst},
      {"ci-rel-mode", "exact", "relative interval inversion: exact or symmetric", kEst},
      {"rel-threshold", "0.02", "smallest true H included in relative errors", kEval},
      {"bins", "20", "histogram bins", kEval},
      {"matrix", "false", "benchmark grid of models x evaluation lengths", kEval, true},
      {"train-lengths", "", "row labels for the models in matrix mode", kEval},
      {"eval-lengths", "100,200,400,800,1600,3200,6400", "evaluation lengths in matrix mode", kEval},
      {"out", "", "output file (generate) or directory; default runs/<timestamp>-<seed>",
       kGen | kTrain | kEst | kEval},
      {"threads", "0", "worker threads (0 = all cores); never changes results", kGen | kTrain | kEst | kEval},
  };
  return keys;
}

inline const KeySpec* find_key(std::string_view name) {
  for (const auto& k : key_schema()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

/// Fully resolved key/value configuration of one run.
class RunConfig {
public:
  RunConfig() = default;
  explicit RunConfig(Command c) : command_(c) {}

  Command command() const noexcept { return command_; }

  void set(const std::string& key, std::string value) {
    const KeySpec* spec = find_key(key);
    if (!spec) throw ValidationError("unknown config key '" + key + "'");
    if (!(spec->commands & bit(command_))) {
      throw ValidationError("key '" + key + "' does not apply to '" + std::string(to_string(command_)) + "'");
    }
    values_[key] = std::move(value);
  }

  bool has(const std::string& key) const {
    auto it = values_.find(key);
    return it != values_.end() && !it->second.empty();
  }

  std::string str(const std::string& key) const {
    auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    const KeySpec* spec = find_key(key);
    return spec ? spec->default_value : std::string();
  }

  double real(const std::string& key) const { return parse_number<double>(key); }
  std::uint64_t u64(const std::string& key) const { return parse_number<std::uint64_t>(key); }
  std::size_t size(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }
  std::uint32_t u32(const std::string& key) const {
    const auto v = u64(key);
    if (v > 0xFFFFFFFFull) throw ValidationError("value of '" + key + "' too large");
    return static_cast<std::uint32_t>(v);
  }
  bool boolean(const std::string& key) const {
    const auto v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("invalid boolean for '" + key + "': '" + v + "'");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
  }

  std::vector<std::size_t> size_list(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& item : list(key)) out.push_back(static_cast<std::size_t>(parse_value<std::uint64_t>(key, item)));
    return out;
  }

  /// "key = value" lines for the command and every applicable key, in schema order.
  void write(std::ostream& out, bool include_threads) const {
    out << "command = " << to_string(command_) << '\n';
    for (const auto& k : key_schema()) {
      if (!(k.commands & bit(command_))) continue;
      if (k.name == "threads" && !include_threads) continue;
      out << k.name << " = " << str(k.name) << '\n';
    }
  }

private:
  template <class T>
  static T parse_value(const std::string& key, const std::string& v) {
    T out{};
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || v.empty()) {
      throw ValidationError("invalid value for '" + key + "': '" + v + "'");
    }
    return out;
  }

  template <class T>
  T parse_number(const std::string& key) const {
    return parse_value<T>(key, str(key));
  }

  Command command_ = Command::generate;
  std::map<std::string, std::string> values_;
};

/// Parsed config file: optional `command` plus key/value pairs in file order.
struct ConfigFile {
  std::optional<std::string> command;
  std::vector<std::pair<std::string, std::string>> entries;
};

/// Flat `key = value` text; '#' starts a comment; blank lines ignored.
inline ConfigFile parse_config(std::istream& in, const std::string& origin = "config") {
  ConfigFile cfg;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (seen.contains(key)) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    seen[key] = lineno;
    if (key == "command") {
      cfg.command = value;
    } else if (!find_key(key)) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    } else {
      cfg.entries.emplace_back(std::move(key), std::move(value));
    }
  }
  return cfg;
}

inline ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  return parse_config(in, path);
}

}  // namespace fracest::cli
