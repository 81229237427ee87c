#include "mfens/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mfens/errors.hpp"

namespace mfens {

double rmse(const std::vector<PredictionPair>& predictions) {
    if (predictions.empty()) throw ConfigError("rmse over an empty set");
    double sum_sq = 0.0;
    for (const auto& p : predictions) {
        const double e = p.actual - p.predicted;
        sum_sq += e * e;
    }
    return std::sqrt(sum_sq / static_cast<double>(predictions.size()));
}

double mae(const std::vector<PredictionPair>& predictions) {
    if (predictions.empty()) throw ConfigError("mae over an empty set");
    double sum_abs = 0.0;
    for (const auto& p : predictions)
        sum_abs += std::abs(p.actual - p.predicted);
    return sum_abs / static_cast<double>(predictions.size());
}

namespace {

double apply_clamp(double v, const std::optional<ClampRange>& clamp) {
    if (!clamp) return v;
    return std::min(std::max(v, clamp->lo), clamp->hi);
}

} // namespace

std::vector<EvalReport> evaluate_all(const std::vector<FactorState>& states,
                                     const std::array<double, 6>& alpha,
                                     const RatingMatrix& test,
                                     std::optional<ClampRange> clamp) {
    if (test.entries.empty()) throw ConfigError("evaluate_all over an empty test set");
    if (states.size() != 6) throw ConfigError("evaluate_all expects six base models");

    const std::size_t n = test.entries.size();
    std::vector<EvalReport> reports;
    reports.reserve(7);
    std::vector<PredictionPair> pairs(n);

    // Base predictions are kept so the ensemble pass reuses them entry-wise.
    std::vector<std::vector<double>> base(6, std::vector<double>(n));
    for (int k = 0; k < 6; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto& e = test.entries[i];
            base[k][i] = predict(states[k], e.row, e.col);
            pairs[i] = {e.value, apply_clamp(base[k][i], clamp)};
        }
        reports.push_back({"k" + std::to_string(k + 1), rmse(pairs), mae(pairs), n});
    }
    for (std::size_t i = 0; i < n; ++i) {
        double h = 0.0;
        for (int k = 0; k < 6; ++k) h += alpha[k] * base[k][i];
        pairs[i] = {test.entries[i].value, apply_clamp(h, clamp)};
    }
    reports.push_back({"ensemble", rmse(pairs), mae(pairs), n});
    return reports;
}

} // namespace mfens
