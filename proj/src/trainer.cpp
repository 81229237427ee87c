#include "mfens/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mfens/errors.hpp"
#include "mfens/rng.hpp"

namespace mfens {

EpochPlan make_epoch_plan(std::size_t num_entries, std::uint64_t seed,
                          int kind_index, std::uint64_t epoch) {
    EpochPlan plan;
    plan.epoch = epoch;
    plan.order.resize(num_entries);
    for (std::size_t i = 0; i < num_entries; ++i)
        plan.order[i] = static_cast<std::uint32_t>(i);
    auto g = make_rng(mix64(seed, static_cast<std::uint64_t>(kind_index), epoch));
    shuffle_inplace(plan.order, g);
    return plan;
}

namespace {

// Shared step coefficient: the branch factor multiplying eta.  Used for the
// bias updates of every kind, the q_n cross term in inner-product space, and
// the unit-vector term in distance space.
double step_coefficient(LossKind loss, double eta, double delta) {
    switch (loss) {
    case LossKind::L1:
        return delta >= 0.0 ? eta : -eta;  // sign(0) = +1 as written
    case LossKind::L2:
        return eta * delta;
    case LossKind::SmoothL1:
        if (delta > 1.0) return eta;
        if (delta < -1.0) return -eta;
        return 2.0 * eta * delta;
    }
    return 0.0;
}

} // namespace

void sgd_step(FactorState& state, const RatingEntry& entry, const Hyperparams& hp) {
    if (entry.row >= state.num_rows || entry.col >= state.num_cols)
        throw std::out_of_range("sgd_step entry (" + std::to_string(entry.row) + "," +
                                std::to_string(entry.col) + ") out of range");
    double* p = state.row_factor(entry.row);
    double* q = state.col_factor(entry.col);
    double& bm = state.row_bias[entry.row];
    double& bn = state.col_bias[entry.col];
    const std::uint32_t d = state.dim;
    const double decay = 1.0 - hp.eta * hp.lambda;

    double core = 0.0;
    if (state.kind.space == Space::InnerProduct) {
        for (std::uint32_t j = 0; j < d; ++j) core += p[j] * q[j];
    } else {
        for (std::uint32_t j = 0; j < d; ++j) {
            const double diff = p[j] - q[j];
            core += diff * diff;
        }
        core = std::sqrt(core);
    }
    // Same association as predict(), so a residual formed against a stored
    // prediction is exactly zero.
    const double h_hat = core + bm + bn;
    const double delta = entry.value - h_hat;
    const double c = step_coefficient(state.kind.loss, hp.eta, delta);

    // Element-wise updates read the old values into locals first, so both
    // new vectors are computed from the pre-step snapshot.
    double probe = 0.0;
    if (state.kind.space == Space::InnerProduct) {
        for (std::uint32_t j = 0; j < d; ++j) {
            const double po = p[j], qo = q[j];
            p[j] = decay * po + c * qo;
            q[j] = decay * qo + c * po;
            probe += p[j] + q[j];
        }
    } else {
        const double denom = std::max(core, hp.dist_eps);
        for (std::uint32_t j = 0; j < d; ++j) {
            const double po = p[j], qo = q[j];
            const double unit = (po - qo) / denom;
            p[j] = decay * po + c * unit;
            q[j] = decay * qo - c * unit;
            probe += p[j] + q[j];
        }
    }
    bm = decay * bm + c;
    bn = decay * bn + c;
    probe += bm + bn;
    if (!std::isfinite(probe))
        throw DivergenceError(state.kind.index, 0, entry.row, entry.col);
}

void run_epoch(FactorState& state, const RatingMatrix& train,
               const Hyperparams& hp, std::uint64_t epoch) {
    if (train.entries.empty())
        throw ConfigError("run_epoch requires a non-empty training set");
    const EpochPlan plan =
        make_epoch_plan(train.entries.size(), hp.seed, state.kind.index, epoch);
    for (std::uint32_t idx : plan.order) {
        try {
            sgd_step(state, train.entries[idx], hp);
        } catch (const DivergenceError& e) {
            throw DivergenceError(e.kind_index, epoch, e.row, e.col);
        }
    }
}

namespace {

// Per-entry objective used by the finite-difference side of the check.
double entry_objective(const FactorState& state, const RatingEntry& entry,
                       double lambda) {
    const double delta = residual(entry.value, predict(state, entry.row, entry.col));
    double f = entry_loss(state.kind.loss, delta);
    const double* p = state.row_factor(entry.row);
    const double* q = state.col_factor(entry.col);
    double reg = 0.0;
    for (std::uint32_t j = 0; j < state.dim; ++j)
        reg += p[j] * p[j] + q[j] * q[j];
    reg += state.row_bias[entry.row] * state.row_bias[entry.row];
    reg += state.col_bias[entry.col] * state.col_bias[entry.col];
    return f + 0.5 * lambda * reg;
}

} // namespace

double gradient_check(const FactorState& state, const RatingEntry& entry,
                      const Hyperparams& hp, double fd_step) {
    const double h_hat = predict(state, entry.row, entry.col);
    const double delta = residual(entry.value, h_hat);
    if (state.kind.loss == LossKind::L1 && std::abs(delta) <= 1e-3)
        throw std::invalid_argument("gradient_check: |delta| too close to the L1 kink");
    if (state.kind.loss == LossKind::SmoothL1 && std::abs(std::abs(delta) - 1.0) <= 1e-3)
        throw std::invalid_argument("gradient_check: |delta| too close to the smooth-L1 kink");
    if (state.kind.space == Space::Distance) {
        const double* p = state.row_factor(entry.row);
        const double* q = state.col_factor(entry.col);
        double norm2 = 0.0;
        for (std::uint32_t j = 0; j < state.dim; ++j)
            norm2 += (p[j] - q[j]) * (p[j] - q[j]);
        if (std::sqrt(norm2) <= 1e-6)
            throw std::invalid_argument("gradient_check: ||p - q|| too small for distance space");
    }

    // Analytic gradient of the per-entry objective, recovered from one step.
    FactorState stepped = state;
    sgd_step(stepped, entry, hp);
    const std::uint32_t d = state.dim;
    std::vector<double> analytic(2 * d + 2);
    for (std::uint32_t j = 0; j < d; ++j) {
        analytic[j] = (state.row_factor(entry.row)[j] - stepped.row_factor(entry.row)[j]) / hp.eta;
        analytic[d + j] = (state.col_factor(entry.col)[j] - stepped.col_factor(entry.col)[j]) / hp.eta;
    }
    analytic[2 * d] = (state.row_bias[entry.row] - stepped.row_bias[entry.row]) / hp.eta;
    analytic[2 * d + 1] = (state.col_bias[entry.col] - stepped.col_bias[entry.col]) / hp.eta;

    // Central finite differences over the same coordinates.
    FactorState work = state;
    auto coord = [&](std::uint32_t i) -> double& {
        if (i < d) return work.row_factor(entry.row)[i];
        if (i < 2 * d) return work.col_factor(entry.col)[i - d];
        if (i == 2 * d) return work.row_bias[entry.row];
        return work.col_bias[entry.col];
    };
    double max_rel_err = 0.0;
    for (std::uint32_t i = 0; i < 2 * d + 2; ++i) {
        double& x = coord(i);
        const double saved = x;
        x = saved + fd_step;
        const double f_plus = entry_objective(work, entry, hp.lambda);
        x = saved - fd_step;
        const double f_minus = entry_objective(work, entry, hp.lambda);
        x = saved;
        const double fd = (f_plus - f_minus) / (2.0 * fd_step);
        const double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-3});
        max_rel_err = std::max(max_rel_err, std::abs(analytic[i] - fd) / denom);
    }
    return max_rel_err;
}

} // namespace mfens
