#ifndef MFENS_ENSEMBLE_HPP
#define MFENS_ENSEMBLE_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfens/metrics.hpp"
#include "mfens/model.hpp"
#include "mfens/ratings.hpp"

namespace mfens {

// Cumulative losses and the adaptive weights derived from them.
struct EnsembleState {
    std::array<double, 6> cumulative_loss{};
    std::array<double, 6> weight{1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
    double zeta = 0.0;
    std::uint64_t epoch = 0;
};

// Per-model record for one epoch.
struct ModelEpochStats {
    double partial_loss = 0.0;
    double cumulative_loss = 0.0;
    double weight = 0.0;
    double test_rmse = 0.0;
    double test_mae = 0.0;
};

struct EpochRecord {
    std::uint64_t epoch = 0;
    std::array<ModelEpochStats, 6> models{};
    double ensemble_rmse = 0.0;
    double ensemble_mae = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
};

// Sum over the training set of |h - h_hat| with the model's own prediction
// form -- absolute error for every kind.  Throws DivergenceError on a
// non-finite result and ConfigError on an empty set.
double partial_loss(const FactorState& state, const RatingMatrix& train);

// cl_prev + pl; throws ConfigError when pl is negative.
double accumulate(double cl_prev, double pl);

// Softmax of -zeta * cl, stabilized by subtracting min_k(zeta * cl_k) before
// exponentiation (an exact identity).  Weights sum to 1; zeta = 0 yields the
// uniform 1/6 vector.
std::array<double, 6> ensemble_weights(const std::array<double, 6>& cumulative_loss,
                                       double zeta);

// sum_k alpha_k * predict(states[k], m, n).
double ensemble_predict(const std::vector<FactorState>& states,
                        const std::array<double, 6>& alpha,
                        std::uint32_t m, std::uint32_t n);

struct TrainResult {
    std::vector<FactorState> states;  // six, in kind order
    EnsembleState ensemble;
    TrainingHistory history;
};

// Full training loop: per epoch each of the six trainers runs one epoch (in
// parallel), then the coordinator computes the partial losses on the training
// set, updates cumulative losses and weights, and scores every model plus the
// ensemble on the test set with the epoch's weights.  on_epoch, when set, is
// invoked after each epoch barrier with the freshly appended record.
// zeta defaults to 1 / |train| when hp.zeta is unset.
// Throws DivergenceError naming the first failed model.
TrainResult train_ensemble(const RatingMatrix& train, const RatingMatrix& test,
                           const Hyperparams& hp,
                           std::optional<ClampRange> clamp = {},
                           const std::function<void(const EpochRecord&)>& on_epoch = {});

// Checkpoint lines: "zeta=", "epoch=", "cl=<6 values>", "alpha=<6 values>".
void save_ensemble(const EnsembleState& state, std::ostream& out);
EnsembleState load_ensemble(std::istream& in);
void save_ensemble_file(const EnsembleState& state, const std::string& path);
EnsembleState load_ensemble_file(const std::string& path);

} // namespace mfens

#endif
