#ifndef MFENS_MODEL_HPP
#define MFENS_MODEL_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfens/ratings.hpp"

namespace mfens {

enum class Space { InnerProduct, Distance };
enum class LossKind { L1, L2, SmoothL1 };

// One of the six (space, loss) pairings, indexed k = 1..6:
//   k=1 inner+L1, k=2 inner+L2, k=3 inner+smoothL1,
//   k=4 distance+L1, k=5 distance+L2, k=6 distance+smoothL1.
struct ModelKind {
    Space space = Space::InnerProduct;
    LossKind loss = LossKind::L2;
    int index = 2;

    bool operator==(const ModelKind&) const = default;
};

constexpr int kNumModels = 6;

ModelKind model_kind_from_index(int k);
const std::array<ModelKind, kNumModels>& all_model_kinds();

struct Hyperparams {
    double eta = 0.01;            // learning rate
    double lambda = 0.02;         // regularization strength
    std::uint32_t dim = 20;       // latent dimension
    std::optional<double> zeta;   // ensemble balance; unset -> 1/|train| at training time
    std::uint32_t epochs = 50;
    std::uint64_t seed = 0;
    double init_scale = 0.05;     // half-width of uniform factor init
    double dist_eps = 1e-12;      // denominator guard for distance-space gradients

    // Throws ConfigError on any violated constraint, including the
    // eta*lambda < 1 stability bound.
    void validate() const;
};

// Latent factors and biases for one base model.  Factor matrices are stored
// row-major with stride dim.
struct FactorState {
    ModelKind kind;
    std::uint32_t num_rows = 0;
    std::uint32_t num_cols = 0;
    std::uint32_t dim = 0;
    std::vector<double> row_factors;  // num_rows x dim
    std::vector<double> col_factors;  // num_cols x dim
    std::vector<double> row_bias;     // num_rows
    std::vector<double> col_bias;     // num_cols

    const double* row_factor(std::uint32_t m) const { return row_factors.data() + std::size_t(m) * dim; }
    const double* col_factor(std::uint32_t n) const { return col_factors.data() + std::size_t(n) * dim; }
    double* row_factor(std::uint32_t m) { return row_factors.data() + std::size_t(m) * dim; }
    double* col_factor(std::uint32_t n) { return col_factors.data() + std::size_t(n) * dim; }

    bool operator==(const FactorState&) const = default;
};

// Factors drawn i.i.d. uniform on [-init_scale, +init_scale] from a generator
// seeded by (hp.seed, kind.index); biases start at zero.
FactorState init_state(std::uint32_t num_rows, std::uint32_t num_cols,
                       ModelKind kind, const Hyperparams& hp);

// Inner-product space: dot(p_m, q_n) + b_m + b_n.
// Distance space:      ||p_m - q_n||_2 + b_m + b_n.
// Throws std::out_of_range for bad indices.
double predict(const FactorState& state, std::uint32_t m, std::uint32_t n);

// h - h_hat.
inline double residual(double h, double h_hat) { return h - h_hat; }

// Per-entry loss term for the kind's loss:
//   L1: |delta|, L2: delta^2 / 2, smooth L1: |delta| if |delta| > 1 else delta^2.
double entry_loss(LossKind loss, double delta);

// Full objective over the data: sum of per-entry loss terms plus
// lambda/2 * sum over entries of (||p_m||^2 + ||q_n||^2 + b_m^2 + b_n^2).
// The regularizer is accumulated once per observed entry, so frequently
// observed rows are regularized more strongly.
// Throws DivergenceError if the result is non-finite.
double objective(const FactorState& state, const RatingMatrix& data, double lambda);

// Checkpoint text format: "kind=", "rows=", "cols=", "d=" header lines, then
// the row factors (one line per row), column factors, row biases and column
// biases, all with 17 significant digits.
void save_state(const FactorState& state, std::ostream& out);
FactorState load_state(std::istream& in);
void save_state_file(const FactorState& state, const std::string& path);
FactorState load_state_file(const std::string& path);

} // namespace mfens

#endif
