#include "mfens/cli.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "mfens/ensemble.hpp"
#include "mfens/errors.hpp"
#include "mfens/metrics.hpp"
#include "mfens/ratings.hpp"
#include "mfens/textfmt.hpp"
#include "mfens/trainer.hpp"

namespace fs = std::filesystem;

namespace mfens {

namespace {

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& value) {
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v))
        throw ConfigError(key + ": expected a finite number, got '" + value + "'");
    return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (value.empty() || value[0] == '-' || errno != 0 ||
        end != value.c_str() + value.size())
        throw ConfigError(key + ": expected a nonnegative integer, got '" + value + "'");
    return v;
}

std::uint32_t to_u32(const std::string& key, const std::string& value) {
    std::uint64_t v = to_u64(key, value);
    if (v > 0xFFFFFFFFull)
        throw ConfigError(key + ": value " + value + " does not fit in 32 bits");
    return static_cast<std::uint32_t>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

ClampRange rating_range(const RatingMatrix& m) {
    ClampRange r{m.entries.front().value, m.entries.front().value};
    for (const auto& e : m.entries) {
        r.lo = std::min(r.lo, e.value);
        r.hi = std::max(r.hi, e.value);
    }
    return r;
}

void require_set(const std::string& value, const std::string& what) {
    if (value.empty())
        throw ConfigError(what + " is required (flag or config file)");
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

std::string model_path(const std::string& dir, int k) {
    return dir + "/model_k" + std::to_string(k + 1) + ".txt";
}

void print_report_table(std::ostream& out, const std::vector<EvalReport>& reports) {
    out << std::left << std::setw(10) << "predictor" << std::setw(16) << "rmse"
        << std::setw(16) << "mae" << "count\n";
    for (const auto& r : reports)
        out << std::left << std::setw(10) << r.predictor_id << std::setw(16)
            << fmt_g10(r.rmse) << std::setw(16) << fmt_g10(r.mae) << r.count << "\n";
}

// Prediction when one or both sides of the pair were never seen in training:
// the missing side contributes zero factors and zero bias.
double predict_sided(const FactorState& st, const double* p, double bm,
                     const double* q, double bn) {
    double core = 0.0;
    if (st.kind.space == Space::InnerProduct) {
        if (p && q)
            for (std::uint32_t j = 0; j < st.dim; ++j) core += p[j] * q[j];
    } else {
        double sq = 0.0;
        for (std::uint32_t j = 0; j < st.dim; ++j) {
            double diff = (p ? p[j] : 0.0) - (q ? q[j] : 0.0);
            sq += diff * diff;
        }
        core = std::sqrt(sq);
    }
    return core + bm + bn;
}

std::vector<FactorState> load_model_dir(const std::string& dir) {
    std::vector<FactorState> states;
    states.reserve(6);
    for (int k = 0; k < 6; ++k) states.push_back(load_state_file(model_path(dir, k)));
    for (int k = 1; k < 6; ++k)
        if (states[k].num_rows != states[0].num_rows ||
            states[k].num_cols != states[0].num_cols)
            throw ParseError("checkpoint dimensions disagree between model_k1 and model_k" +
                             std::to_string(k + 1));
    return states;
}

} // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "input", "train", "test", "pairs", "model_dir", "out",
        "format", "train_fraction", "eta", "lambda", "d", "zeta",
        "epochs", "seed", "init_scale", "dist_eps", "clamp"};
    return keys;
}

void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value) {
    if (key == "input") cfg.input_path = value;
    else if (key == "train") cfg.train_path = value;
    else if (key == "test") cfg.test_path = value;
    else if (key == "pairs") cfg.pairs_path = value;
    else if (key == "model_dir") cfg.model_dir = value;
    else if (key == "out") cfg.out_path = value;
    else if (key == "format") cfg.format = delimiter_name(delimiter_from_name(value));
    else if (key == "train_fraction") cfg.train_fraction = to_real(key, value);
    else if (key == "eta") cfg.hp.eta = to_real(key, value);
    else if (key == "lambda") cfg.hp.lambda = to_real(key, value);
    else if (key == "d") cfg.hp.dim = to_u32(key, value);
    else if (key == "zeta") {
        if (value == "auto") cfg.hp.zeta.reset();
        else cfg.hp.zeta = to_real(key, value);
    }
    else if (key == "epochs") cfg.hp.epochs = to_u32(key, value);
    else if (key == "seed") cfg.hp.seed = to_u64(key, value);
    else if (key == "init_scale") cfg.hp.init_scale = to_real(key, value);
    else if (key == "dist_eps") cfg.hp.dist_eps = to_real(key, value);
    else if (key == "clamp") cfg.clamp = to_bool(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

std::string render_config_entry(const RunConfig& cfg, const std::string& key) {
    if (key == "input") return cfg.input_path;
    if (key == "train") return cfg.train_path;
    if (key == "test") return cfg.test_path;
    if (key == "pairs") return cfg.pairs_path;
    if (key == "model_dir") return cfg.model_dir;
    if (key == "out") return cfg.out_path;
    if (key == "format") return cfg.format;
    if (key == "train_fraction") return fmt_g17(cfg.train_fraction);
    if (key == "eta") return fmt_g17(cfg.hp.eta);
    if (key == "lambda") return fmt_g17(cfg.hp.lambda);
    if (key == "d") return std::to_string(cfg.hp.dim);
    if (key == "zeta") return cfg.hp.zeta ? fmt_g17(*cfg.hp.zeta) : "auto";
    if (key == "epochs") return std::to_string(cfg.hp.epochs);
    if (key == "seed") return std::to_string(cfg.hp.seed);
    if (key == "init_scale") return fmt_g17(cfg.hp.init_scale);
    if (key == "dist_eps") return fmt_g17(cfg.hp.dist_eps);
    if (key == "clamp") return cfg.clamp ? "true" : "false";
    throw ConfigError("unknown config key '" + key + "'");
}

std::string render_config(const RunConfig& cfg) {
    static const char* path_keys[] = {"input", "train", "test",
                                      "pairs", "model_dir", "out"};
    std::ostringstream out;
    for (const auto& key : config_keys()) {
        const std::string value = render_config_entry(cfg, key);
        bool is_path = std::find_if(std::begin(path_keys), std::end(path_keys),
                                    [&](const char* p) { return key == p; }) !=
                       std::end(path_keys);
        if (is_path && value.empty()) continue;
        out << key << " = " << value << "\n";
    }
    return out.str();
}

void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim_copy(line);
        if (text.empty() || text[0] == '#') continue;
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" + text + "'");
        const std::string key = trim_copy(text.substr(0, eq));
        const std::string value = trim_copy(text.substr(eq + 1));
        try {
            apply_config_entry(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void cmd_split(const RunConfig& cfg) {
    require_set(cfg.input_path, "--input");
    require_set(cfg.out_path, "--out");
    if (!(cfg.train_fraction > 0.0) || !(cfg.train_fraction < 1.0))
        throw ConfigError("train_fraction must be strictly between 0 and 1, got " +
                          fmt_g10(cfg.train_fraction));
    const Delimiter fmt = delimiter_from_name(cfg.format);
    const ParseResult parsed = parse_ratings_file(cfg.input_path, fmt, /*id_remap=*/true);
    const auto [train, test] =
        split(parsed.matrix, SplitSpec{cfg.train_fraction, cfg.hp.seed});

    ensure_dir(cfg.out_path);
    // Outputs are written tab-separated with dense indices and a dims
    // directive, so downstream commands need no remapping or format flag.
    write_matrix_file(train, cfg.out_path + "/train.txt", Delimiter::Tab);
    write_matrix_file(test, cfg.out_path + "/test.txt", Delimiter::Tab);
    write_remap_file(parsed.rows, cfg.out_path + "/rows.map");
    write_remap_file(parsed.cols, cfg.out_path + "/cols.map");

    std::cout << "rows=" << parsed.matrix.num_rows
              << " cols=" << parsed.matrix.num_cols << "\n"
              << "train=" << train.entries.size()
              << " test=" << test.entries.size() << "\n"
              << "density=" << fmt_g10(density(parsed.matrix)) << "\n";
}

void cmd_train(const RunConfig& cfg) {
    require_set(cfg.train_path, "--train");
    require_set(cfg.test_path, "--test");
    require_set(cfg.out_path, "--out");
    cfg.hp.validate();
    if (cfg.hp.epochs < 1) throw ConfigError("epochs must be >= 1");
    const Delimiter fmt = delimiter_from_name(cfg.format);

    RatingMatrix train = parse_ratings_file(cfg.train_path, fmt, false).matrix;
    RatingMatrix test = parse_ratings_file(cfg.test_path, fmt, false).matrix;
    // Size the models over the union so test rows/cols unseen in training are
    // scored with their initial parameters instead of crashing.
    const std::uint32_t rows = std::max(train.num_rows, test.num_rows);
    const std::uint32_t cols = std::max(train.num_cols, test.num_cols);
    train.num_rows = test.num_rows = rows;
    train.num_cols = test.num_cols = cols;

    ensure_dir(cfg.out_path);
    {
        std::ofstream rc(cfg.out_path + "/config.resolved");
        if (!rc) throw IoError("cannot write " + cfg.out_path + "/config.resolved");
        rc << render_config(cfg);
    }

    std::ofstream csv(cfg.out_path + "/metrics.csv");
    if (!csv) throw IoError("cannot write " + cfg.out_path + "/metrics.csv");
    csv << "epoch,predictor,pl,cl,alpha,test_rmse,test_mae\n";
    const auto on_epoch = [&csv](const EpochRecord& r) {
        for (int k = 0; k < 6; ++k) {
            const ModelEpochStats& s = r.models[k];
            csv << r.epoch << ",k" << (k + 1) << "," << fmt_g10(s.partial_loss)
                << "," << fmt_g10(s.cumulative_loss) << "," << fmt_g10(s.weight)
                << "," << fmt_g10(s.test_rmse) << "," << fmt_g10(s.test_mae) << "\n";
        }
        csv << r.epoch << ",ensemble,,,," << fmt_g10(r.ensemble_rmse) << ","
            << fmt_g10(r.ensemble_mae) << "\n";
        csv.flush();
    };

    const std::optional<ClampRange> clamp =
        cfg.clamp ? std::optional<ClampRange>(rating_range(test)) : std::nullopt;
    const TrainResult result = train_ensemble(train, test, cfg.hp, clamp, on_epoch);

    for (int k = 0; k < 6; ++k)
        save_state_file(result.states[k], model_path(cfg.out_path, k));
    save_ensemble_file(result.ensemble, cfg.out_path + "/ensemble.txt");

    // Carry id remap sidecars forward when the train file came from cmd_split,
    // so cmd_predict can resolve raw ids against this model directory.
    const fs::path src_dir = fs::path(cfg.train_path).parent_path();
    for (const char* name : {"rows.map", "cols.map"}) {
        const fs::path src = src_dir / name;
        const fs::path dst = fs::path(cfg.out_path) / name;
        std::error_code ec;
        if (fs::exists(src, ec) && !ec &&
            !(fs::exists(dst) && fs::equivalent(src, dst)))
            fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
    }

    const EpochRecord& last = result.history.epochs.back();
    std::vector<EvalReport> reports;
    for (int k = 0; k < 6; ++k)
        reports.push_back({"k" + std::to_string(k + 1), last.models[k].test_rmse,
                           last.models[k].test_mae, test.entries.size()});
    reports.push_back({"ensemble", last.ensemble_rmse, last.ensemble_mae,
                       test.entries.size()});
    std::cout << "epochs=" << cfg.hp.epochs << " train=" << train.entries.size()
              << " test=" << test.entries.size() << "\n";
    print_report_table(std::cout, reports);
}

void cmd_evaluate(const RunConfig& cfg) {
    require_set(cfg.model_dir, "--model-dir");
    require_set(cfg.test_path, "--test");
    const Delimiter fmt = delimiter_from_name(cfg.format);

    const std::vector<FactorState> states = load_model_dir(cfg.model_dir);
    const EnsembleState ensemble = load_ensemble_file(cfg.model_dir + "/ensemble.txt");
    RatingMatrix test = parse_ratings_file(cfg.test_path, fmt, false).matrix;
    if (test.num_rows > states[0].num_rows || test.num_cols > states[0].num_cols)
        throw ConfigError("test set spans " + std::to_string(test.num_rows) + "x" +
                          std::to_string(test.num_cols) + " but models cover " +
                          std::to_string(states[0].num_rows) + "x" +
                          std::to_string(states[0].num_cols));
    test.num_rows = states[0].num_rows;
    test.num_cols = states[0].num_cols;

    const std::optional<ClampRange> clamp =
        cfg.clamp ? std::optional<ClampRange>(rating_range(test)) : std::nullopt;
    const auto reports = evaluate_all(states, ensemble.weight, test, clamp);
    print_report_table(std::cout, reports);

    const std::string csv_path =
        cfg.out_path.empty() ? cfg.model_dir + "/eval.csv" : cfg.out_path;
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot write " + csv_path);
    csv << "predictor,rmse,mae,count\n";
    for (const auto& r : reports)
        csv << r.predictor_id << "," << fmt_g10(r.rmse) << "," << fmt_g10(r.mae)
            << "," << r.count << "\n";
}

void cmd_predict(const RunConfig& cfg) {
    require_set(cfg.model_dir, "--model-dir");
    require_set(cfg.pairs_path, "--pairs");
    const Delimiter fmt = delimiter_from_name(cfg.format);
    const std::string sep = delimiter_token(fmt);

    const std::vector<FactorState> states = load_model_dir(cfg.model_dir);
    const EnsembleState ensemble = load_ensemble_file(cfg.model_dir + "/ensemble.txt");

    IdRemap rows, cols;
    if (fs::exists(cfg.model_dir + "/rows.map"))
        rows = read_remap_file(cfg.model_dir + "/rows.map");
    if (fs::exists(cfg.model_dir + "/cols.map"))
        cols = read_remap_file(cfg.model_dir + "/cols.map");

    // Resolve a raw id token to a dense index: through the remap when one was
    // trained with, otherwise as a literal dense index.  Anything that does
    // not resolve within bounds is an unknown entity -> fallback prediction.
    const auto resolve = [](const IdRemap& remap, const std::string& token,
                            std::uint32_t bound) -> std::optional<std::uint32_t> {
        if (!remap.empty()) {
            const auto it = remap.to_dense.find(token);
            if (it == remap.to_dense.end() || it->second >= bound) return std::nullopt;
            return it->second;
        }
        char* end = nullptr;
        errno = 0;
        const unsigned long long v = std::strtoull(token.c_str(), &end, 10);
        if (token.empty() || token[0] == '-' || errno != 0 ||
            end != token.c_str() + token.size() || v >= bound)
            return std::nullopt;
        return static_cast<std::uint32_t>(v);
    };

    std::ifstream in(cfg.pairs_path);
    if (!in) throw IoError("cannot open pairs file: " + cfg.pairs_path);
    std::ofstream file_out;
    if (cfg.out_path != "-" && !cfg.out_path.empty()) {
        file_out.open(cfg.out_path);
        if (!file_out) throw IoError("cannot write " + cfg.out_path);
    }
    std::ostream& out = file_out.is_open() ? file_out : std::cout;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string text = trim_copy(line);
        if (text.empty() || text[0] == '#') continue;
        const std::size_t cut = text.find(sep);
        if (cut == std::string::npos)
            throw ParseError(cfg.pairs_path + ":" + std::to_string(line_no) +
                             ": expected user" + sep + "item");
        const std::string user = trim_copy(text.substr(0, cut));
        std::string item = trim_copy(text.substr(cut + sep.size()));
        const std::size_t extra = item.find(sep);  // tolerate trailing fields
        if (extra != std::string::npos) item = trim_copy(item.substr(0, extra));
        if (user.empty() || item.empty())
            throw ParseError(cfg.pairs_path + ":" + std::to_string(line_no) +
                             ": empty id field");

        const auto m = resolve(rows, user, states[0].num_rows);
        const auto n = resolve(cols, item, states[0].num_cols);
        double base[6];
        double ens = 0.0;
        for (int k = 0; k < 6; ++k) {
            const FactorState& st = states[k];
            base[k] = predict_sided(st, m ? st.row_factor(*m) : nullptr,
                                    m ? st.row_bias[*m] : 0.0,
                                    n ? st.col_factor(*n) : nullptr,
                                    n ? st.col_bias[*n] : 0.0);
            ens += ensemble.weight[k] * base[k];
        }
        out << user << "," << item << "," << fmt_g10(ens);
        for (int k = 0; k < 6; ++k) out << "," << fmt_g10(base[k]);
        out << "," << ((m && n) ? "ok" : "fallback") << "\n";
    }
    if (file_out.is_open() && !file_out)
        throw IoError("failed writing " + cfg.out_path);
}

void cmd_weights(const RunConfig& cfg) {
    require_set(cfg.model_dir, "--model-dir");
    const std::string csv_path = cfg.model_dir + "/metrics.csv";
    std::ifstream csv(csv_path);
    if (csv) {
        std::string line;
        if (!std::getline(csv, line) ||
            line.rfind("epoch,predictor,", 0) != 0)
            throw ParseError(csv_path + ": missing metrics header");
        std::cout << "epoch";
        for (int k = 1; k <= 6; ++k) std::cout << "\tk" << k;
        std::cout << "\n";
        std::string epoch;
        std::vector<std::string> alphas;
        while (std::getline(csv, line)) {
            std::vector<std::string> f;
            std::size_t start = 0;
            while (true) {
                const std::size_t c = line.find(',', start);
                f.push_back(line.substr(start, c == std::string::npos
                                                   ? std::string::npos
                                                   : c - start));
                if (c == std::string::npos) break;
                start = c + 1;
            }
            if (f.size() != 7)
                throw ParseError(csv_path + ": malformed row '" + line + "'");
            if (f[1] == "ensemble") continue;
            if (f[0] != epoch) {
                epoch = f[0];
                alphas.clear();
            }
            alphas.push_back(f[4]);
            if (alphas.size() == 6) {
                std::cout << epoch;
                for (const auto& a : alphas) std::cout << "\t" << a;
                std::cout << "\n";
            }
        }
        return;
    }
    // No training CSV around: fall back to the final weights checkpoint.
    const EnsembleState ensemble = load_ensemble_file(cfg.model_dir + "/ensemble.txt");
    std::cout << "epoch";
    for (int k = 1; k <= 6; ++k) std::cout << "\tk" << k;
    std::cout << "\n" << ensemble.epoch;
    for (int k = 0; k < 6; ++k) std::cout << "\t" << fmt_g10(ensemble.weight[k]);
    std::cout << "\n";
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"latent-factor ensemble trainer for sparse rating matrices"};
    app.require_subcommand(1);

    struct Cmd {
        CLI::App* sub = nullptr;
        void (*fn)(const RunConfig&) = nullptr;
        RunConfig flags;
        double zeta_flag = 0.0;
        std::string config_path;
        std::vector<std::pair<std::string, CLI::Option*>> tracked;
    };
    std::vector<Cmd> cmds(5);

    const auto common = [](Cmd& c) {
        c.sub->add_option("--config", c.config_path,
                          "flat 'key = value' config file (flags win)");
    };
    const auto track = [](Cmd& c, const std::string& key, CLI::Option* opt) {
        c.tracked.emplace_back(key, opt);
    };

    {
        Cmd& c = cmds[0];
        c.fn = cmd_split;
        c.sub = app.add_subcommand("split", "partition a ratings file into train/test");
        track(c, "input", c.sub->add_option("--input", c.flags.input_path,
                                            "ratings file (user sep item sep rating)"));
        track(c, "out", c.sub->add_option("--out", c.flags.out_path,
                                          "output directory"));
        track(c, "format", c.sub->add_option("--format", c.flags.format,
                                             "tab | comma | double-colon"));
        track(c, "train_fraction",
              c.sub->add_option("--train-fraction", c.flags.train_fraction,
                                "fraction of entries for training (0,1)"));
        track(c, "seed", c.sub->add_option("--seed", c.flags.hp.seed, "shuffle seed"));
        common(c);
    }
    {
        Cmd& c = cmds[1];
        c.fn = cmd_train;
        c.sub = app.add_subcommand("train", "train the six base models and ensemble");
        track(c, "train", c.sub->add_option("--train", c.flags.train_path,
                                            "training ratings file"));
        track(c, "test", c.sub->add_option("--test", c.flags.test_path,
                                           "held-out ratings file"));
        track(c, "out", c.sub->add_option("--out", c.flags.out_path,
                                          "output directory for checkpoints"));
        track(c, "format", c.sub->add_option("--format", c.flags.format,
                                             "tab | comma | double-colon"));
        track(c, "eta", c.sub->add_option("--eta", c.flags.hp.eta, "learning rate"));
        track(c, "lambda", c.sub->add_option("--lambda", c.flags.hp.lambda,
                                             "regularization strength"));
        track(c, "d", c.sub->add_option("--dim", c.flags.hp.dim, "latent dimension"));
        track(c, "zeta", c.sub->add_option("--zeta", c.zeta_flag,
                                           "weight sharpness (default 1/|train|)"));
        track(c, "epochs", c.sub->add_option("--epochs", c.flags.hp.epochs,
                                             "training epochs"));
        track(c, "seed", c.sub->add_option("--seed", c.flags.hp.seed, "RNG seed"));
        track(c, "init_scale",
              c.sub->add_option("--init-scale", c.flags.hp.init_scale,
                                "half-width of uniform factor init"));
        track(c, "dist_eps", c.sub->add_option("--dist-eps", c.flags.hp.dist_eps,
                                               "distance-gradient denominator guard"));
        track(c, "clamp", c.sub->add_flag("--clamp", c.flags.clamp,
                                          "clamp scored predictions to the test rating range"));
        common(c);
    }
    {
        Cmd& c = cmds[2];
        c.fn = cmd_evaluate;
        c.sub = app.add_subcommand("evaluate", "score checkpoints against a test file");
        track(c, "model_dir", c.sub->add_option("--model-dir", c.flags.model_dir,
                                                "directory written by 'train'"));
        track(c, "test", c.sub->add_option("--test", c.flags.test_path,
                                           "held-out ratings file"));
        track(c, "out", c.sub->add_option("--out", c.flags.out_path,
                                          "metrics CSV path (default <model-dir>/eval.csv)"));
        track(c, "format", c.sub->add_option("--format", c.flags.format,
                                             "tab | comma | double-colon"));
        track(c, "clamp", c.sub->add_flag("--clamp", c.flags.clamp,
                                          "clamp scored predictions to the test rating range"));
        common(c);
    }
    {
        Cmd& c = cmds[3];
        c.fn = cmd_predict;
        c.sub = app.add_subcommand("predict", "predict ratings for user/item pairs");
        track(c, "model_dir", c.sub->add_option("--model-dir", c.flags.model_dir,
                                                "directory written by 'train'"));
        track(c, "pairs", c.sub->add_option("--pairs", c.flags.pairs_path,
                                            "file of user<sep>item lines"));
        track(c, "out", c.sub->add_option("--out", c.flags.out_path,
                                          "predictions file ('-' = stdout)"));
        track(c, "format", c.sub->add_option("--format", c.flags.format,
                                             "tab | comma | double-colon"));
        common(c);
    }
    {
        Cmd& c = cmds[4];
        c.fn = cmd_weights;
        c.sub = app.add_subcommand("weights", "print the ensemble weight trajectory");
        track(c, "model_dir", c.sub->add_option("--model-dir", c.flags.model_dir,
                                                "directory written by 'train'"));
        common(c);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the usage error
        return code == 0 ? 0 : 1;
    }

    try {
        for (Cmd& c : cmds) {
            if (!c.sub->parsed()) continue;
            RunConfig cfg;
            if (!c.config_path.empty()) load_config_file(cfg, c.config_path);
            const CLI::Option* zopt = c.sub->get_option_no_throw("--zeta");
            if (zopt && zopt->count() > 0) c.flags.hp.zeta = c.zeta_flag;
            for (const auto& [key, opt] : c.tracked)
                if (opt->count() > 0)
                    apply_config_entry(cfg, key, render_config_entry(c.flags, key));
            c.fn(cfg);
            return 0;
        }
        std::cerr << "no command given\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace mfens
