#ifndef MFENS_TRAINER_HPP
#define MFENS_TRAINER_HPP

#include <cstdint>
#include <vector>

#include "mfens/model.hpp"
#include "mfens/ratings.hpp"

namespace mfens {

// Visit order for one training epoch, derived deterministically from
// (seed, kind.index, epoch).
struct EpochPlan {
    std::uint64_t epoch = 1;
    std::vector<std::uint32_t> order;
};

EpochPlan make_epoch_plan(std::size_t num_entries, std::uint64_t seed,
                          int kind_index, std::uint64_t epoch);

// One stochastic-gradient update for state.kind on a single entry.  All four
// right-hand sides use the pre-step values of p_m, q_n, b_m, b_n (snapshot
// semantics).  Branches: L1 kinds take the "+" branch at delta == 0; smooth-L1
// kinds scale by 2*eta*delta on the |delta| <= 1 branch; distance kinds divide
// by max(||p_m - q_n||, dist_eps).
// Throws DivergenceError when the update produces a non-finite value.
void sgd_step(FactorState& state, const RatingEntry& entry, const Hyperparams& hp);

// Applies sgd_step to every training entry exactly once, in the plan order
// for (hp.seed, state.kind.index, epoch).  Throws DivergenceError (with the
// epoch filled in) if any step diverges.
void run_epoch(FactorState& state, const RatingMatrix& train,
               const Hyperparams& hp, std::uint64_t epoch);

// Verification oracle: compares the analytic per-entry update direction,
// recovered as (old - new) / eta per coordinate, against central finite
// differences of the per-entry objective
//   loss(delta) + lambda/2 * (||p_m||^2 + ||q_n||^2 + b_m^2 + b_n^2)
// over every coordinate of p_m, q_n, b_m, b_n.  Returns the max relative
// error.  Throws std::invalid_argument when the evaluation point is too close
// to a non-differentiable locus: |delta| <= 1e-3 for L1 kinds,
// ||delta| - 1| <= 1e-3 for smooth-L1 kinds, ||p_m - q_n|| <= 1e-6 for
// distance kinds.
double gradient_check(const FactorState& state, const RatingEntry& entry,
                      const Hyperparams& hp, double fd_step);

} // namespace mfens

#endif
