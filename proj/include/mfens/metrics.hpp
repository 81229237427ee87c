#ifndef MFENS_METRICS_HPP
#define MFENS_METRICS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfens/model.hpp"
#include "mfens/ratings.hpp"

namespace mfens {

struct PredictionPair {
    double actual = 0.0;
    double predicted = 0.0;
};

// sqrt(sum (h - h_hat)^2 / n).  Throws ConfigError on an empty sequence.
double rmse(const std::vector<PredictionPair>& predictions);

// sum |h - h_hat| / n.  Throws ConfigError on an empty sequence.
double mae(const std::vector<PredictionPair>& predictions);

struct EvalReport {
    std::string predictor_id;  // "k1".."k6" or "ensemble"
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t count = 0;
};

// Optional clamp range applied to predictions before scoring; off by default
// since clamping alters the reported error.
struct ClampRange {
    double lo = 0.0;
    double hi = 0.0;
};

// Seven reports (six base models then the ensemble) over the same test
// entries, in a fixed reduction order.  Unseen rows/columns are evaluated
// with their initialized parameters, not skipped.
std::vector<EvalReport> evaluate_all(const std::vector<FactorState>& states,
                                     const std::array<double, 6>& alpha,
                                     const RatingMatrix& test,
                                     std::optional<ClampRange> clamp = {});

} // namespace mfens

#endif
