#include "mfens/model.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mfens/errors.hpp"
#include "mfens/rng.hpp"
#include "mfens/textfmt.hpp"

namespace mfens {

ModelKind model_kind_from_index(int k) {
    if (k < 1 || k > kNumModels)
        throw ConfigError("model kind index must be 1..6, got " + std::to_string(k));
    return all_model_kinds()[k - 1];
}

const std::array<ModelKind, kNumModels>& all_model_kinds() {
    static const std::array<ModelKind, kNumModels> kinds = {{
        {Space::InnerProduct, LossKind::L1, 1},
        {Space::InnerProduct, LossKind::L2, 2},
        {Space::InnerProduct, LossKind::SmoothL1, 3},
        {Space::Distance, LossKind::L1, 4},
        {Space::Distance, LossKind::L2, 5},
        {Space::Distance, LossKind::SmoothL1, 6},
    }};
    return kinds;
}

void Hyperparams::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta))
        throw ConfigError("eta must be positive and finite");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw ConfigError("lambda must be nonnegative and finite");
    if (dim < 1) throw ConfigError("latent dimension d must be >= 1");
    if (zeta && (!(*zeta >= 0.0) || !std::isfinite(*zeta)))
        throw ConfigError("zeta must be nonnegative and finite");
    if (!(init_scale >= 0.0) || !std::isfinite(init_scale))
        throw ConfigError("init_scale must be nonnegative and finite");
    if (!(dist_eps > 0.0)) throw ConfigError("dist_eps must be positive");
    // (1 - eta*lambda) <= 0 would sign-flip every parameter on each visit.
    if (!(eta * lambda < 1.0))
        throw ConfigError("unstable configuration: eta*lambda = " +
                          fmt_g10(eta * lambda) + " must be < 1");
}

FactorState init_state(std::uint32_t num_rows, std::uint32_t num_cols,
                       ModelKind kind, const Hyperparams& hp) {
    if (num_rows == 0 || num_cols == 0)
        throw ConfigError("factor state dimensions must be positive");
    FactorState s;
    s.kind = kind;
    s.num_rows = num_rows;
    s.num_cols = num_cols;
    s.dim = hp.dim;
    s.row_factors.resize(std::size_t(num_rows) * hp.dim);
    s.col_factors.resize(std::size_t(num_cols) * hp.dim);
    s.row_bias.assign(num_rows, 0.0);
    s.col_bias.assign(num_cols, 0.0);

    auto g = make_rng(mix64(hp.seed, static_cast<std::uint64_t>(kind.index)));
    for (auto& v : s.row_factors) v = next_symmetric(g, hp.init_scale);
    for (auto& v : s.col_factors) v = next_symmetric(g, hp.init_scale);
    return s;
}

namespace {

void check_indices(const FactorState& s, std::uint32_t m, std::uint32_t n) {
    if (m >= s.num_rows || n >= s.num_cols)
        throw std::out_of_range("prediction index (" + std::to_string(m) + "," +
                                std::to_string(n) + ") out of range for " +
                                std::to_string(s.num_rows) + "x" +
                                std::to_string(s.num_cols));
}

} // namespace

double predict(const FactorState& state, std::uint32_t m, std::uint32_t n) {
    check_indices(state, m, n);
    const double* p = state.row_factor(m);
    const double* q = state.col_factor(n);
    double core = 0.0;
    if (state.kind.space == Space::InnerProduct) {
        for (std::uint32_t j = 0; j < state.dim; ++j) core += p[j] * q[j];
    } else {
        for (std::uint32_t j = 0; j < state.dim; ++j) {
            const double diff = p[j] - q[j];
            core += diff * diff;
        }
        core = std::sqrt(core);
    }
    return core + state.row_bias[m] + state.col_bias[n];
}

double entry_loss(LossKind loss, double delta) {
    switch (loss) {
    case LossKind::L1: return std::abs(delta);
    case LossKind::L2: return 0.5 * delta * delta;
    case LossKind::SmoothL1:
        return std::abs(delta) > 1.0 ? std::abs(delta) : delta * delta;
    }
    return 0.0;
}

double objective(const FactorState& state, const RatingMatrix& data, double lambda) {
    double total = 0.0;
    for (const auto& e : data.entries) {
        const double delta = residual(e.value, predict(state, e.row, e.col));
        total += entry_loss(state.kind.loss, delta);
        if (lambda != 0.0) {
            const double* p = state.row_factor(e.row);
            const double* q = state.col_factor(e.col);
            double reg = 0.0;
            for (std::uint32_t j = 0; j < state.dim; ++j)
                reg += p[j] * p[j] + q[j] * q[j];
            reg += state.row_bias[e.row] * state.row_bias[e.row];
            reg += state.col_bias[e.col] * state.col_bias[e.col];
            total += 0.5 * lambda * reg;
        }
    }
    if (!std::isfinite(total))
        throw DivergenceError(state.kind.index, 0, 0, 0);
    return total;
}

namespace {

std::uint64_t read_header_u64(std::istream& in, const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("checkpoint truncated before '" + key + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind(key + "=", 0) != 0)
        throw ParseError("checkpoint: expected '" + key + "=<value>', got '" + line + "'");
    const std::string value = line.substr(key.size() + 1);
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (errno != 0 || end != value.c_str() + value.size())
        throw ParseError("checkpoint: bad value for '" + key + "': " + value);
    return v;
}

void read_values(std::istream& in, double* out, std::size_t count,
                 const std::string& what) {
    for (std::size_t i = 0; i < count; ++i) {
        if (!(in >> out[i]))
            throw ParseError("checkpoint truncated while reading " + what);
        if (!std::isfinite(out[i]))
            throw ParseError("checkpoint: non-finite value in " + what);
    }
}

} // namespace

void save_state(const FactorState& state, std::ostream& out) {
    out << "kind=" << state.kind.index << "\n";
    out << "rows=" << state.num_rows << "\n";
    out << "cols=" << state.num_cols << "\n";
    out << "d=" << state.dim << "\n";
    auto write_rows = [&](const std::vector<double>& flat, std::uint32_t count) {
        for (std::uint32_t r = 0; r < count; ++r) {
            const double* base = flat.data() + std::size_t(r) * state.dim;
            for (std::uint32_t j = 0; j < state.dim; ++j)
                out << (j ? " " : "") << fmt_g17(base[j]);
            out << "\n";
        }
    };
    write_rows(state.row_factors, state.num_rows);
    write_rows(state.col_factors, state.num_cols);
    for (std::uint32_t m = 0; m < state.num_rows; ++m)
        out << (m ? " " : "") << fmt_g17(state.row_bias[m]);
    out << "\n";
    for (std::uint32_t n = 0; n < state.num_cols; ++n)
        out << (n ? " " : "") << fmt_g17(state.col_bias[n]);
    out << "\n";
}

FactorState load_state(std::istream& in) {
    FactorState s;
    const auto kind_index = read_header_u64(in, "kind");
    s.kind = model_kind_from_index(static_cast<int>(kind_index));
    s.num_rows = static_cast<std::uint32_t>(read_header_u64(in, "rows"));
    s.num_cols = static_cast<std::uint32_t>(read_header_u64(in, "cols"));
    s.dim = static_cast<std::uint32_t>(read_header_u64(in, "d"));
    if (s.num_rows == 0 || s.num_cols == 0 || s.dim == 0)
        throw ParseError("checkpoint: dimensions must be positive");
    s.row_factors.resize(std::size_t(s.num_rows) * s.dim);
    s.col_factors.resize(std::size_t(s.num_cols) * s.dim);
    s.row_bias.resize(s.num_rows);
    s.col_bias.resize(s.num_cols);
    read_values(in, s.row_factors.data(), s.row_factors.size(), "row factors");
    read_values(in, s.col_factors.data(), s.col_factors.size(), "column factors");
    read_values(in, s.row_bias.data(), s.row_bias.size(), "row biases");
    read_values(in, s.col_bias.data(), s.col_bias.size(), "column biases");
    return s;
}

void save_state_file(const FactorState& state, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    save_state(state, out);
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

FactorState load_state_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    try {
        return load_state(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace mfens
