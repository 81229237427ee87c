#include "doctest.h"

#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "mfens/ensemble.hpp"
#include "mfens/errors.hpp"
#include "mfens/model.hpp"
#include "testutil.hpp"

using namespace mfens;

static FactorState zero_state(ModelKind kind, std::uint32_t rows,
                              std::uint32_t cols, std::uint32_t dim = 2) {
    FactorState st;
    st.kind = kind;
    st.num_rows = rows;
    st.num_cols = cols;
    st.dim = dim;
    st.row_factors.assign(static_cast<std::size_t>(rows) * dim, 0.0);
    st.col_factors.assign(static_cast<std::size_t>(cols) * dim, 0.0);
    st.row_bias.assign(rows, 0.0);
    st.col_bias.assign(cols, 0.0);
    return st;
}

static RatingMatrix small_matrix(std::vector<RatingEntry> entries,
                                 std::uint32_t rows, std::uint32_t cols) {
    RatingMatrix m;
    m.num_rows = rows;
    m.num_cols = cols;
    m.entries = std::move(entries);
    return m;
}

static std::string state_bytes(const FactorState& st) {
    std::ostringstream out;
    save_state(st, out);
    return out.str();
}

TEST_CASE("partial loss is the absolute error sum for every kind") {
    // A zero model predicts 0 everywhere, so ratings 3 and 4 give 7 -- the
    // same for an inner-product kind and a distance kind.
    const auto train = small_matrix({{0, 0, 3.0}, {1, 1, 4.0}}, 2, 2);
    CHECK(partial_loss(zero_state(model_kind_from_index(1), 2, 2), train) ==
          doctest::Approx(7.0));
    CHECK(partial_loss(zero_state(model_kind_from_index(5), 2, 2), train) ==
          doctest::Approx(7.0));

    // Errors +1 and -1 contribute 1 each regardless of sign.
    FactorState st = zero_state(model_kind_from_index(2), 2, 2);
    st.row_bias = {1.0, -1.0};
    const auto zero_train = small_matrix({{0, 0, 0.0}, {1, 1, 0.0}}, 2, 2);
    CHECK(partial_loss(st, zero_train) == doctest::Approx(2.0));

    // A perfect fit scores zero.
    st.row_bias = {3.0, 4.0};
    CHECK(partial_loss(st, train) == 0.0);
}

TEST_CASE("partial loss rejects empty sets and non-finite predictions") {
    const auto empty = small_matrix({}, 2, 2);
    CHECK_THROWS_AS(partial_loss(zero_state(model_kind_from_index(1), 2, 2), empty),
                    ConfigError);

    FactorState st = zero_state(model_kind_from_index(3), 2, 2);
    st.row_bias[0] = std::numeric_limits<double>::infinity();
    const auto train = small_matrix({{0, 0, 1.0}}, 2, 2);
    CHECK_THROWS_AS(partial_loss(st, train), DivergenceError);
    try {
        partial_loss(st, train);
    } catch (const DivergenceError& e) {
        CHECK(e.kind_index == 3);
        CHECK(std::string(e.what()).find("k3") != std::string::npos);
    }
}

TEST_CASE("cumulative loss accumulates and rejects negative increments") {
    CHECK(accumulate(0.0, 5.0) == 5.0);
    CHECK(accumulate(5.0, 0.0) == 5.0);
    double cl = 0.0;
    for (int t = 1; t <= 4; ++t) cl = accumulate(cl, 1.5);
    CHECK(cl == doctest::Approx(6.0));
    CHECK_THROWS_AS(accumulate(1.0, -0.5), ConfigError);
}

TEST_CASE("weights on a hand-checked cumulative loss vector") {
    // cl = (0,1,1,1,1,1) with zeta = 1: the leader takes 1/(1+5/e), the
    // rest split the remainder evenly.
    const std::array<double, 6> cl = {0.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    const auto w = ensemble_weights(cl, 1.0);
    const double lead = 1.0 / (1.0 + 5.0 * std::exp(-1.0));
    const double rest = std::exp(-1.0) / (1.0 + 5.0 * std::exp(-1.0));
    CHECK(w[0] == doctest::Approx(lead).epsilon(1e-14));
    CHECK(w[0] == doctest::Approx(0.3522).epsilon(1e-4));
    for (int k = 1; k < 6; ++k) CHECK(w[k] == doctest::Approx(rest).epsilon(1e-14));
}

TEST_CASE("zeta = 0 and equal losses both give the uniform vector") {
    const std::array<double, 6> cl = {10.0, 20.0, 30.0, 40.0, 50.0, 60.0};
    for (const double v : ensemble_weights(cl, 0.0)) CHECK(v == 1.0 / 6.0);

    const std::array<double, 6> equal = {7.0, 7.0, 7.0, 7.0, 7.0, 7.0};
    for (const double v : ensemble_weights(equal, 0.3)) CHECK(v == 1.0 / 6.0);
}

TEST_CASE("weights sum to one and are shift-invariant") {
    std::mt19937_64 gen(123);
    std::uniform_real_distribution<double> dist(0.0, 50.0);
    for (int round = 0; round < 50; ++round) {
        std::array<double, 6> cl;
        for (auto& v : cl) v = dist(gen);
        const double zeta = 0.05 + 0.02 * round;
        const auto w = ensemble_weights(cl, zeta);
        double sum = 0.0;
        for (const double v : w) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

        std::array<double, 6> shifted = cl;
        for (auto& v : shifted) v += 17.5;
        const auto ws = ensemble_weights(shifted, zeta);
        for (int k = 0; k < 6; ++k)
            CHECK(ws[k] == doctest::Approx(w[k]).epsilon(1e-12));
    }
}

TEST_CASE("a smaller cumulative loss never gets a smaller weight") {
    std::mt19937_64 gen(321);
    std::uniform_real_distribution<double> dist(0.0, 100.0);
    for (int round = 0; round < 50; ++round) {
        std::array<double, 6> cl;
        for (auto& v : cl) v = dist(gen);
        const auto w = ensemble_weights(cl, 0.2);
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b)
                if (cl[a] < cl[b]) CHECK(w[a] >= w[b]);
    }
}

TEST_CASE("huge cumulative losses stay finite and favour the leader") {
    const std::array<double, 6> cl = {1e9, 2e9, 3e9, 4e9, 5e9, 6e9};
    const auto w = ensemble_weights(cl, 1.0);
    double sum = 0.0;
    for (const double v : w) {
        CHECK(std::isfinite(v));
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w[0] == doctest::Approx(1.0));
}

TEST_CASE("ensemble prediction is the weighted model average") {
    // Six bias-only models predicting the constants 1..6.
    std::vector<FactorState> states;
    for (int k = 1; k <= 6; ++k) {
        FactorState st = zero_state(model_kind_from_index(k), 1, 1);
        st.row_bias[0] = static_cast<double>(k);
        states.push_back(st);
    }
    std::array<double, 6> alpha{};
    alpha.fill(1.0 / 6.0);
    CHECK(ensemble_predict(states, alpha, 0, 0) == doctest::Approx(3.5));

    alpha = {0.0, 0.0, 0.0, 1.0, 0.0, 0.0};
    CHECK(ensemble_predict(states, alpha, 0, 0) == doctest::Approx(4.0));

    // Any convex combination stays inside the model range.
    alpha = {0.4, 0.1, 0.1, 0.1, 0.1, 0.2};
    const double h = ensemble_predict(states, alpha, 0, 0);
    CHECK(h >= 1.0);
    CHECK(h <= 6.0);

    states.pop_back();
    CHECK_THROWS_AS(ensemble_predict(states, alpha, 0, 0), ConfigError);
}

TEST_CASE("zero epochs returns initialized models, uniform weights, no history") {
    const auto train = small_matrix({{0, 0, 3.0}, {1, 1, 2.0}}, 2, 2);
    const auto test = small_matrix({{0, 1, 1.0}}, 2, 2);
    Hyperparams hp;
    hp.dim = 3;
    hp.epochs = 0;
    hp.seed = 9;

    const auto result = train_ensemble(train, test, hp);
    REQUIRE(result.states.size() == 6);
    for (int k = 0; k < 6; ++k) {
        const auto fresh = init_state(2, 2, model_kind_from_index(k + 1), hp);
        CHECK(state_bytes(result.states[k]) == state_bytes(fresh));
        CHECK(result.ensemble.weight[k] == 1.0 / 6.0);
        CHECK(result.ensemble.cumulative_loss[k] == 0.0);
    }
    CHECK(result.ensemble.epoch == 0);
    CHECK(result.history.epochs.empty());
}

TEST_CASE("zeta defaults to one over the training size") {
    const auto train = small_matrix({{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}, {1, 1, 4.0}},
                                    2, 2);
    const auto test = small_matrix({{0, 0, 1.0}}, 2, 2);
    Hyperparams hp;
    hp.dim = 2;
    hp.epochs = 1;
    CHECK(train_ensemble(train, test, hp).ensemble.zeta == 1.0 / 4.0);

    hp.zeta = 0.75;
    CHECK(train_ensemble(train, test, hp).ensemble.zeta == 0.75);
}

TEST_CASE("a zero learning rate freezes the models and makes cl = t * pl") {
    const auto train = small_matrix({{0, 0, 4.0}, {1, 2, 2.0}, {2, 1, 5.0}}, 3, 3);
    const auto test = small_matrix({{0, 1, 3.0}}, 3, 3);
    Hyperparams hp;
    hp.eta = 0.0;
    hp.lambda = 0.0;
    hp.dim = 2;
    hp.epochs = 5;
    hp.seed = 4;
    hp.zeta = 0.01;

    const auto result = train_ensemble(train, test, hp);
    REQUIRE(result.history.epochs.size() == 5);
    for (int k = 0; k < 6; ++k) {
        const auto fresh = init_state(3, 3, model_kind_from_index(k + 1), hp);
        CHECK(state_bytes(result.states[k]) == state_bytes(fresh));

        // Every epoch reproduces the same partial loss, so the cumulative
        // loss is an exact multiple of it.
        const double pl = result.history.epochs[0].models[k].partial_loss;
        for (std::size_t t = 0; t < 5; ++t) {
            const auto& stats = result.history.epochs[t].models[k];
            CHECK(stats.partial_loss == pl);
            CHECK(stats.cumulative_loss ==
                  doctest::Approx(static_cast<double>(t + 1) * pl).epsilon(1e-12));
        }
    }

    // The frozen model with the smallest per-epoch loss gains weight each
    // epoch while the largest one loses it.
    int best = 0, worst = 0;
    const auto& first = result.history.epochs[0].models;
    for (int k = 1; k < 6; ++k) {
        if (first[k].partial_loss < first[best].partial_loss) best = k;
        if (first[k].partial_loss > first[worst].partial_loss) worst = k;
    }
    REQUIRE(first[best].partial_loss < first[worst].partial_loss);
    for (std::size_t t = 1; t < 5; ++t) {
        const auto& prev = result.history.epochs[t - 1].models;
        const auto& cur = result.history.epochs[t].models;
        CHECK(cur[best].weight > prev[best].weight);
        CHECK(cur[worst].weight < prev[worst].weight);
    }
}

TEST_CASE("training is deterministic across runs") {
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> val(1.0, 5.0);
    std::vector<RatingEntry> entries;
    for (std::uint32_t r = 0; r < 12; ++r)
        for (std::uint32_t c = 0; c < 10; c += (r % 3) + 1)
            entries.push_back({r, c, val(gen)});
    const auto train = small_matrix(entries, 12, 10);
    const auto test = small_matrix({{0, 0, 3.0}, {5, 5, 2.0}, {11, 9, 4.0}}, 12, 10);

    Hyperparams hp;
    hp.eta = 0.05;
    hp.lambda = 0.01;
    hp.dim = 4;
    hp.epochs = 6;
    hp.seed = 2024;

    const auto a = train_ensemble(train, test, hp);
    const auto b = train_ensemble(train, test, hp);
    for (int k = 0; k < 6; ++k) {
        CHECK(state_bytes(a.states[k]) == state_bytes(b.states[k]));
        CHECK(a.ensemble.cumulative_loss[k] == b.ensemble.cumulative_loss[k]);
        CHECK(a.ensemble.weight[k] == b.ensemble.weight[k]);
    }
    REQUIRE(a.history.epochs.size() == b.history.epochs.size());
    const auto& ra = a.history.epochs.back();
    const auto& rb = b.history.epochs.back();
    CHECK(ra.ensemble_rmse == rb.ensemble_rmse);
    CHECK(ra.ensemble_mae == rb.ensemble_mae);

    // The ensemble's error never exceeds the weighted average of the model
    // errors on the same test set.
    double avg_rmse = 0.0, avg_mae = 0.0;
    for (int k = 0; k < 6; ++k) {
        avg_rmse += ra.models[k].weight * ra.models[k].test_rmse;
        avg_mae += ra.models[k].weight * ra.models[k].test_mae;
    }
    CHECK(ra.ensemble_rmse <= avg_rmse + 1e-9);
    CHECK(ra.ensemble_mae <= avg_mae + 1e-9);
}

TEST_CASE("the per-epoch callback sees every appended record in order") {
    const auto train = small_matrix({{0, 0, 2.0}, {1, 1, 3.0}}, 2, 2);
    const auto test = small_matrix({{0, 1, 2.0}}, 2, 2);
    Hyperparams hp;
    hp.dim = 2;
    hp.epochs = 4;

    std::vector<std::uint64_t> seen;
    const auto result = train_ensemble(train, test, hp, {},
                                       [&](const EpochRecord& rec) {
                                           seen.push_back(rec.epoch);
                                       });
    REQUIRE(seen.size() == 4);
    for (std::uint64_t t = 0; t < 4; ++t) CHECK(seen[t] == t + 1);
    CHECK(result.ensemble.epoch == 4);
}

TEST_CASE("a diverging run reports the model, epoch and entry") {
    const auto train = small_matrix({{0, 0, 5.0}, {0, 1, 5.0}, {1, 0, 5.0}}, 2, 2);
    const auto test = small_matrix({{1, 1, 5.0}}, 2, 2);
    Hyperparams hp;
    hp.eta = 1e200;  // overflows the factors within an epoch or two
    hp.lambda = 0.0;
    hp.dim = 2;
    hp.epochs = 10;
    hp.seed = 3;

    try {
        train_ensemble(train, test, hp);
        FAIL("expected a divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.kind_index >= 1);
        CHECK(e.kind_index <= 6);
        CHECK(e.epoch >= 1);
        CHECK(std::string(e.what()).find("k" + std::to_string(e.kind_index)) !=
              std::string::npos);
    }
}

TEST_CASE("ensemble checkpoints round-trip exactly") {
    EnsembleState st;
    st.cumulative_loss = {0.1, 2.25, 1.0 / 3.0, 4.5e-7, 55.0, 6.625};
    st.weight = {0.05, 0.15, 0.25, 0.35, 0.1, 0.1};
    st.zeta = 1.0 / 1537.0;
    st.epoch = 42;

    std::ostringstream out;
    save_ensemble(st, out);
    std::istringstream in(out.str());
    const EnsembleState back = load_ensemble(in);
    CHECK(back.zeta == st.zeta);
    CHECK(back.epoch == st.epoch);
    for (int k = 0; k < 6; ++k) {
        CHECK(back.cumulative_loss[k] == st.cumulative_loss[k]);
        CHECK(back.weight[k] == st.weight[k]);
    }
}

TEST_CASE("corrupt ensemble checkpoints are rejected") {
    EnsembleState st;
    st.zeta = 0.01;
    std::ostringstream out;
    save_ensemble(st, out);
    const std::string text = out.str();

    // Drop the final line.
    std::string truncated = text.substr(0, text.rfind("alpha="));
    std::istringstream t(truncated);
    CHECK_THROWS_AS(load_ensemble(t), ParseError);

    // Mangle a numeric field.
    std::string mangled = text;
    mangled.replace(mangled.find("zeta=") + 5, 1, "x");
    std::istringstream m(mangled);
    CHECK_THROWS_AS(load_ensemble(m), ParseError);

    std::istringstream empty("");
    CHECK_THROWS_AS(load_ensemble(empty), ParseError);
}

TEST_CASE("ensemble checkpoint file helpers report path problems") {
    TempDir dir;
    EnsembleState st;
    st.zeta = 0.5;
    st.epoch = 7;
    st.cumulative_loss = {1, 2, 3, 4, 5, 6};
    const std::string path = dir.file("ens.txt");
    save_ensemble_file(st, path);
    const EnsembleState back = load_ensemble_file(path);
    CHECK(back.epoch == 7);
    CHECK(back.cumulative_loss[5] == 6.0);

    CHECK_THROWS_AS(load_ensemble_file(dir.file("missing.txt")), IoError);
    CHECK_THROWS_AS(save_ensemble_file(st, dir.file("no/such/dir/x.txt")), IoError);
}
