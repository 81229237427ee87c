#ifndef MFENS_CLI_HPP
#define MFENS_CLI_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "mfens/model.hpp"

namespace mfens {

// Everything a command can be told, merged from three layers with
// flag > config file > built-in default precedence.
struct RunConfig {
    std::string input_path;   // split: raw ratings file
    std::string train_path;   // train: training ratings file
    std::string test_path;    // train/evaluate: held-out ratings file
    std::string pairs_path;   // predict: "user<TAB>item" lines
    std::string model_dir;    // evaluate/predict/weights: cmd_train output dir
    std::string out_path;     // output directory or file, meaning per command
    std::string format = "tab";
    double train_fraction = 0.8;
    bool clamp = false;       // clamp scored predictions to the test rating range
    Hyperparams hp;
};

// The fixed key order used by config files and the resolved-config echo.
const std::vector<std::string>& config_keys();

// Applies one "key = value" setting; throws ConfigError on an unknown key or
// an unparsable value.  "zeta = auto" clears zeta back to its trained default.
void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value);

// Value of one key, formatted so that applying it back reproduces the config
// bit-for-bit (17 significant digits for reals).
std::string render_config_entry(const RunConfig& cfg, const std::string& key);

// Full "key = value" document in config_keys() order; empty path keys are
// omitted.  Written by cmd_train as config.resolved.
std::string render_config(const RunConfig& cfg);

// Parses a flat "key = value" file ('#' comments, blank lines ignored) into
// cfg.  Throws ConfigError (bad line/key/value, with line number) or IoError.
void load_config_file(RunConfig& cfg, const std::string& path);

// Subcommand bodies.  Each throws: ConfigError (usage), ParseError/IoError
// (bad data or filesystem), DivergenceError (training blew up).
void cmd_split(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_predict(const RunConfig& cfg);
void cmd_weights(const RunConfig& cfg);

// Full argv entry point.  Exit codes: 0 success, 1 usage/config error,
// 2 I/O or parse error, 3 divergence.
int run_cli(int argc, const char* const* argv);

} // namespace mfens

#endif
