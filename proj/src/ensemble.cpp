#include "mfens/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "mfens/errors.hpp"
#include "mfens/textfmt.hpp"
#include "mfens/trainer.hpp"

namespace mfens {

double partial_loss(const FactorState& state, const RatingMatrix& train) {
    if (train.entries.empty()) throw ConfigError("partial_loss over an empty training set");
    double total = 0.0;
    for (const auto& e : train.entries)
        total += std::abs(e.value - predict(state, e.row, e.col));
    if (!std::isfinite(total))
        throw DivergenceError(state.kind.index, 0, 0, 0);
    return total;
}

double accumulate(double cl_prev, double pl) {
    if (pl < 0.0) throw ConfigError("partial loss must be nonnegative");
    return cl_prev + pl;
}

std::array<double, 6> ensemble_weights(const std::array<double, 6>& cumulative_loss,
                                       double zeta) {
    std::array<double, 6> scaled{};
    for (int k = 0; k < 6; ++k) scaled[k] = zeta * cumulative_loss[k];
    const double lo = *std::min_element(scaled.begin(), scaled.end());
    std::array<double, 6> alpha{};
    double total = 0.0;
    for (int k = 0; k < 6; ++k) {
        alpha[k] = std::exp(-(scaled[k] - lo));
        total += alpha[k];
    }
    for (int k = 0; k < 6; ++k) alpha[k] /= total;
    return alpha;
}

double ensemble_predict(const std::vector<FactorState>& states,
                        const std::array<double, 6>& alpha,
                        std::uint32_t m, std::uint32_t n) {
    if (states.size() != 6) throw ConfigError("ensemble_predict expects six base models");
    double h = 0.0;
    for (int k = 0; k < 6; ++k) h += alpha[k] * predict(states[k], m, n);
    return h;
}

TrainResult train_ensemble(const RatingMatrix& train, const RatingMatrix& test,
                           const Hyperparams& hp,
                           std::optional<ClampRange> clamp,
                           const std::function<void(const EpochRecord&)>& on_epoch) {
    if (train.entries.empty()) throw ConfigError("training set is empty");
    if (test.entries.empty()) throw ConfigError("test set is empty");

    TrainResult result;
    result.states.reserve(6);
    for (const auto& kind : all_model_kinds())
        result.states.push_back(init_state(train.num_rows, train.num_cols, kind, hp));
    result.ensemble.zeta =
        hp.zeta ? *hp.zeta : 1.0 / static_cast<double>(train.entries.size());

    for (std::uint64_t t = 1; t <= hp.epochs; ++t) {
        // The six trainers run this epoch concurrently; each owns its state
        // and also computes its partial loss before the barrier.
        std::array<double, 6> pl{};
        std::array<std::exception_ptr, 6> failures{};
        std::vector<std::thread> workers;
        workers.reserve(6);
        for (int k = 0; k < 6; ++k) {
            workers.emplace_back([&, k] {
                try {
                    run_epoch(result.states[k], train, hp, t);
                    pl[k] = partial_loss(result.states[k], train);
                } catch (const DivergenceError& e) {
                    failures[k] = std::make_exception_ptr(
                        e.epoch == 0 ? DivergenceError(e.kind_index, t, e.row, e.col)
                                     : e);
                } catch (...) {
                    failures[k] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) w.join();
        for (int k = 0; k < 6; ++k)
            if (failures[k]) std::rethrow_exception(failures[k]);

        for (int k = 0; k < 6; ++k)
            result.ensemble.cumulative_loss[k] =
                accumulate(result.ensemble.cumulative_loss[k], pl[k]);
        result.ensemble.weight =
            ensemble_weights(result.ensemble.cumulative_loss, result.ensemble.zeta);
        result.ensemble.epoch = t;

        const auto reports =
            evaluate_all(result.states, result.ensemble.weight, test, clamp);
        EpochRecord record;
        record.epoch = t;
        for (int k = 0; k < 6; ++k) {
            record.models[k] = {pl[k], result.ensemble.cumulative_loss[k],
                                result.ensemble.weight[k], reports[k].rmse,
                                reports[k].mae};
        }
        record.ensemble_rmse = reports[6].rmse;
        record.ensemble_mae = reports[6].mae;
        result.history.epochs.push_back(record);
        if (on_epoch) on_epoch(result.history.epochs.back());
    }
    return result;
}

namespace {

std::string read_prefixed_line(std::istream& in, const std::string& key) {
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("ensemble checkpoint truncated before '" + key + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind(key + "=", 0) != 0)
        throw ParseError("ensemble checkpoint: expected '" + key + "=', got '" + line + "'");
    return line.substr(key.size() + 1);
}

std::array<double, 6> parse_six(const std::string& text, const std::string& key) {
    std::istringstream ss(text);
    std::array<double, 6> out{};
    for (int k = 0; k < 6; ++k)
        if (!(ss >> out[k]))
            throw ParseError("ensemble checkpoint: expected 6 values for '" + key + "'");
    std::string rest;
    if (ss >> rest)
        throw ParseError("ensemble checkpoint: trailing data after '" + key + "'");
    return out;
}

} // namespace

void save_ensemble(const EnsembleState& state, std::ostream& out) {
    out << "zeta=" << fmt_g17(state.zeta) << "\n";
    out << "epoch=" << state.epoch << "\n";
    out << "cl=";
    for (int k = 0; k < 6; ++k) out << (k ? " " : "") << fmt_g17(state.cumulative_loss[k]);
    out << "\n";
    out << "alpha=";
    for (int k = 0; k < 6; ++k) out << (k ? " " : "") << fmt_g17(state.weight[k]);
    out << "\n";
}

EnsembleState load_ensemble(std::istream& in) {
    EnsembleState s;
    const std::string zeta_text = read_prefixed_line(in, "zeta");
    char* end = nullptr;
    s.zeta = std::strtod(zeta_text.c_str(), &end);
    if (end != zeta_text.c_str() + zeta_text.size() || !std::isfinite(s.zeta))
        throw ParseError("ensemble checkpoint: bad zeta '" + zeta_text + "'");
    const std::string epoch_text = read_prefixed_line(in, "epoch");
    errno = 0;
    s.epoch = std::strtoull(epoch_text.c_str(), &end, 10);
    if (errno != 0 || end != epoch_text.c_str() + epoch_text.size())
        throw ParseError("ensemble checkpoint: bad epoch '" + epoch_text + "'");
    s.cumulative_loss = parse_six(read_prefixed_line(in, "cl"), "cl");
    s.weight = parse_six(read_prefixed_line(in, "alpha"), "alpha");
    return s;
}

void save_ensemble_file(const EnsembleState& state, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write ensemble checkpoint: " + path);
    save_ensemble(state, out);
    if (!out) throw IoError("failed writing ensemble checkpoint: " + path);
}

EnsembleState load_ensemble_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ensemble checkpoint: " + path);
    try {
        return load_ensemble(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace mfens
