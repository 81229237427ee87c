#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfens/errors.hpp"
#include "mfens/model.hpp"
#include "testutil.hpp"

using namespace mfens;

static FactorState two_dim_state(ModelKind kind) {
    FactorState st;
    st.kind = kind;
    st.num_rows = 2;
    st.num_cols = 2;
    st.dim = 2;
    st.row_factors.assign(4, 0.0);
    st.col_factors.assign(4, 0.0);
    st.row_bias.assign(2, 0.0);
    st.col_bias.assign(2, 0.0);
    return st;
}

TEST_CASE("the six kinds map to space/loss pairs in fixed order") {
    const auto& kinds = all_model_kinds();
    REQUIRE(kinds.size() == 6);
    CHECK(kinds[0].space == Space::InnerProduct);
    CHECK(kinds[0].loss == LossKind::L1);
    CHECK(kinds[1].space == Space::InnerProduct);
    CHECK(kinds[1].loss == LossKind::L2);
    CHECK(kinds[2].space == Space::InnerProduct);
    CHECK(kinds[2].loss == LossKind::SmoothL1);
    CHECK(kinds[3].space == Space::Distance);
    CHECK(kinds[3].loss == LossKind::L1);
    CHECK(kinds[4].space == Space::Distance);
    CHECK(kinds[4].loss == LossKind::L2);
    CHECK(kinds[5].space == Space::Distance);
    CHECK(kinds[5].loss == LossKind::SmoothL1);
    for (int k = 0; k < 6; ++k) {
        CHECK(kinds[k].index == k + 1);
        CHECK(model_kind_from_index(k + 1).index == k + 1);
    }
    CHECK_THROWS_AS(model_kind_from_index(0), ConfigError);
    CHECK_THROWS_AS(model_kind_from_index(7), ConfigError);
}

TEST_CASE("inner-product prediction: dot plus biases") {
    FactorState st = two_dim_state(model_kind_from_index(1));
    st.row_factors = {1.0, 2.0, 0.0, 0.0};
    st.col_factors = {3.0, 4.0, 0.0, 0.0};
    st.row_bias[0] = 0.1;
    st.col_bias[0] = 0.2;
    CHECK(predict(st, 0, 0) == doctest::Approx(11.3));
}

TEST_CASE("distance prediction: euclidean norm plus biases") {
    FactorState st = two_dim_state(model_kind_from_index(4));
    st.row_factors = {3.0, 4.0, 0.0, 0.0};
    CHECK(predict(st, 0, 0) == doctest::Approx(5.0));
}

TEST_CASE("all-zero state predicts 0 in both spaces") {
    for (int k : {1, 4}) {
        const FactorState st = two_dim_state(model_kind_from_index(k));
        CHECK(predict(st, 1, 1) == 0.0);
    }
}

TEST_CASE("prediction bounds-checks its indices") {
    const FactorState st = two_dim_state(model_kind_from_index(1));
    CHECK_THROWS_AS(predict(st, 2, 0), std::out_of_range);
    CHECK_THROWS_AS(predict(st, 0, 2), std::out_of_range);
}

TEST_CASE("residual is h minus prediction") {
    CHECK(residual(5.0, 5.0) == 0.0);
    CHECK(residual(5.0, 3.5) == doctest::Approx(1.5));
    CHECK(residual(1.0, 4.0) == doctest::Approx(-3.0));
}

TEST_CASE("per-entry loss branches") {
    CHECK(entry_loss(LossKind::L1, 2.0) == doctest::Approx(2.0));
    CHECK(entry_loss(LossKind::L2, 2.0) == doctest::Approx(2.0));
    CHECK(entry_loss(LossKind::SmoothL1, 2.0) == doctest::Approx(2.0));
    CHECK(entry_loss(LossKind::L1, 0.5) == doctest::Approx(0.5));
    CHECK(entry_loss(LossKind::L2, 0.5) == doctest::Approx(0.125));
    CHECK(entry_loss(LossKind::SmoothL1, 0.5) == doctest::Approx(0.25));
    // SmoothL1 is continuous at |delta| = 1: both branches give 1.
    CHECK(entry_loss(LossKind::SmoothL1, 1.0) == doctest::Approx(1.0));
    CHECK(entry_loss(LossKind::SmoothL1, -1.0) == doctest::Approx(1.0));
    CHECK(entry_loss(LossKind::L1, -2.0) == doctest::Approx(2.0));
}

TEST_CASE("objective is zero for a perfect fit with no regularization") {
    RatingMatrix data;
    data.num_rows = data.num_cols = 2;
    data.entries = {{0, 0, 0.0}, {1, 1, 0.0}};
    for (int k = 1; k <= 6; ++k) {
        const FactorState st = two_dim_state(model_kind_from_index(k));
        CHECK(objective(st, data, 0.0) == 0.0);
    }
}

TEST_CASE("objective applies the per-entry loss branch") {
    RatingMatrix data;
    data.num_rows = data.num_cols = 2;
    data.entries = {{0, 0, 2.0}};  // zero state -> delta = 2
    CHECK(objective(two_dim_state(model_kind_from_index(1)), data, 0.0) ==
          doctest::Approx(2.0));
    CHECK(objective(two_dim_state(model_kind_from_index(2)), data, 0.0) ==
          doctest::Approx(2.0));
    CHECK(objective(two_dim_state(model_kind_from_index(3)), data, 0.0) ==
          doctest::Approx(2.0));

    data.entries = {{0, 0, 0.5}};
    CHECK(objective(two_dim_state(model_kind_from_index(1)), data, 0.0) ==
          doctest::Approx(0.5));
    CHECK(objective(two_dim_state(model_kind_from_index(2)), data, 0.0) ==
          doctest::Approx(0.125));
    CHECK(objective(two_dim_state(model_kind_from_index(3)), data, 0.0) ==
          doctest::Approx(0.25));
}

TEST_CASE("regularizer counts full row/col norms once per observed entry") {
    FactorState st = two_dim_state(model_kind_from_index(2));
    st.row_factors = {1.0, 2.0, 0.0, 0.0};  // ||p_0||^2 = 5
    st.col_factors = {2.0, 0.0, 0.0, 0.0};  // ||q_0||^2 = 4
    st.row_bias[0] = 3.0;                   // b^2 = 9
    st.col_bias[0] = 1.0;                   // b^2 = 1
    RatingMatrix data;
    data.num_rows = data.num_cols = 2;
    const double h = predict(st, 0, 0);  // make delta = 0
    data.entries = {{0, 0, h}};
    // loss 0 + 0.5 * lambda * (5 + 4 + 9 + 1)
    CHECK(objective(st, data, 0.1) == doctest::Approx(0.5 * 0.1 * 19.0));

    // The same row observed twice is regularized twice.
    data.entries.push_back({0, 1, predict(st, 0, 1)});
    const double reg_01 = 5.0 + 0.0 + 9.0 + 0.0;  // q_1 and b_col[1] are zero
    CHECK(objective(st, data, 0.1) == doctest::Approx(0.5 * 0.1 * (19.0 + reg_01)));
}

TEST_CASE("objective reports divergence on non-finite values") {
    FactorState st = two_dim_state(model_kind_from_index(2));
    st.row_bias[0] = std::numeric_limits<double>::infinity();
    RatingMatrix data;
    data.num_rows = data.num_cols = 2;
    data.entries = {{0, 0, 1.0}};
    CHECK_THROWS_AS(objective(st, data, 0.0), DivergenceError);
}

TEST_CASE("initialization is deterministic and respects the scale") {
    Hyperparams hp;
    hp.init_scale = 0.25;
    hp.seed = 42;
    const ModelKind kind = model_kind_from_index(3);
    const FactorState a = init_state(30, 40, kind, hp);
    const FactorState b = init_state(30, 40, kind, hp);
    CHECK(a == b);
    CHECK(a.num_rows == 30);
    CHECK(a.num_cols == 40);
    CHECK(a.row_factors.size() == 30u * hp.dim);
    CHECK(a.col_factors.size() == 40u * hp.dim);

    CHECK(std::all_of(a.row_bias.begin(), a.row_bias.end(),
                      [](double v) { return v == 0.0; }));
    CHECK(std::all_of(a.col_bias.begin(), a.col_bias.end(),
                      [](double v) { return v == 0.0; }));
    for (double v : a.row_factors) {
        CHECK(v >= -0.25);
        CHECK(v <= 0.25);
    }
    const bool some_nonzero = std::any_of(a.row_factors.begin(), a.row_factors.end(),
                                          [](double v) { return v != 0.0; });
    CHECK(some_nonzero);
}

TEST_CASE("init_scale zero gives the all-zero state") {
    Hyperparams hp;
    hp.init_scale = 0.0;
    const FactorState st = init_state(3, 3, model_kind_from_index(1), hp);
    CHECK(std::all_of(st.row_factors.begin(), st.row_factors.end(),
                      [](double v) { return v == 0.0; }));
    CHECK(std::all_of(st.col_factors.begin(), st.col_factors.end(),
                      [](double v) { return v == 0.0; }));
}

TEST_CASE("different kind indices draw different init streams") {
    Hyperparams hp;
    hp.seed = 7;
    const FactorState a = init_state(5, 5, model_kind_from_index(1), hp);
    const FactorState b = init_state(5, 5, model_kind_from_index(2), hp);
    CHECK(a.row_factors != b.row_factors);
}

TEST_CASE("zero dimensions are rejected") {
    Hyperparams hp;
    CHECK_THROWS_AS(init_state(0, 5, model_kind_from_index(1), hp), ConfigError);
    CHECK_THROWS_AS(init_state(5, 0, model_kind_from_index(1), hp), ConfigError);
}

TEST_CASE("hyperparameter validation") {
    Hyperparams hp;
    CHECK_NOTHROW(hp.validate());
    hp.eta = 0.0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = Hyperparams{};
    hp.lambda = -0.1;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = Hyperparams{};
    hp.dim = 0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = Hyperparams{};
    hp.eta = 10.0;
    hp.lambda = 0.2;  // eta*lambda = 2 flips parameter signs every visit
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = Hyperparams{};
    hp.zeta = -1.0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    Hyperparams hp;
    hp.seed = 3;
    hp.init_scale = 0.7;  // exercise full-precision fractions
    const FactorState st = init_state(7, 9, model_kind_from_index(5), hp);

    std::ostringstream out;
    save_state(st, out);
    std::istringstream in(out.str());
    const FactorState back = load_state(in);
    CHECK(back == st);

    // A second serialization of the loaded state is byte-identical.
    std::ostringstream out2;
    save_state(back, out2);
    CHECK(out.str() == out2.str());
}

TEST_CASE("checkpoint loading rejects truncation and corruption") {
    Hyperparams hp;
    const FactorState st = init_state(4, 4, model_kind_from_index(2), hp);
    std::ostringstream out;
    save_state(st, out);
    const std::string text = out.str();

    std::istringstream truncated(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_state(truncated), ParseError);

    std::string corrupt = text;
    corrupt.replace(corrupt.find("kind="), 5, "kidn=");
    std::istringstream bad(corrupt);
    CHECK_THROWS_AS(load_state(bad), ParseError);
}

TEST_CASE("checkpoint files round-trip and missing files raise IoError") {
    TempDir dir;
    Hyperparams hp;
    const FactorState st = init_state(3, 5, model_kind_from_index(6), hp);
    save_state_file(st, dir.file("m.txt"));
    CHECK(load_state_file(dir.file("m.txt")) == st);
    CHECK_THROWS_AS(load_state_file(dir.file("missing.txt")), IoError);
}
