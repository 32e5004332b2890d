#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "orf/effects.hpp"
#include "test_helpers.hpp"

using namespace orf;
using test_helpers::random_ordered_data;

namespace {

TrainMeta continuous_meta(double mean, double sd, double lo, double hi) {
    TrainMeta meta;
    meta.col_names = {"x"};
    meta.categorical_mask = {false};
    meta.mean = {mean};
    meta.sd = {sd};
    meta.min = {lo};
    meta.max = {hi};
    return meta;
}

}  // namespace

TEST_CASE("build_window", "[effects]") {
    SECTION("binary covariate contrasts 1 against 0") {
        TrainMeta meta;
        meta.col_names = {"d"};
        meta.categorical_mask = {true};
        meta.mean = {0.4};
        meta.sd = {0.49};
        meta.min = {0.0};
        meta.max = {1.0};
        const EvalWindow w = build_window(0, {0.4}, meta);
        REQUIRE(w.x_up == 1.0);
        REQUIRE(w.x_lo == 0.0);
        REQUIRE(w.is_discrete);
        REQUIRE(w.scale() == 1.0);
    }
    SECTION("continuous interior point: x +/- 0.1 sd") {
        const TrainMeta meta = continuous_meta(0.0, 2.0, -10.0, 10.0);
        const EvalWindow w = build_window(0, {1.0}, meta);
        REQUIRE(w.x_up == Approx(1.2).margin(1e-15));
        REQUIRE(w.x_lo == Approx(0.8).margin(1e-15));
        REQUIRE_FALSE(w.is_discrete);
    }
    SECTION("at the support maximum the window shifts inward to full width") {
        const TrainMeta meta = continuous_meta(0.0, 2.0, -10.0, 10.0);
        const EvalWindow w = build_window(0, {10.0}, meta);
        REQUIRE(w.x_up == 10.0);
        REQUIRE(w.x_lo == Approx(10.0 - 0.4).margin(1e-12));  // max - 0.2 sd
    }
    SECTION("at the support minimum the window shifts upward") {
        const TrainMeta meta = continuous_meta(0.0, 2.0, -10.0, 10.0);
        const EvalWindow w = build_window(0, {-10.0}, meta);
        REQUIRE(w.x_lo == -10.0);
        REQUIRE(w.x_up == Approx(-10.0 + 0.4).margin(1e-12));
    }
    SECTION("support narrower than 0.2 sd collapses to the full range") {
        const TrainMeta meta = continuous_meta(0.0, 10.0, -0.5, 0.5);
        const EvalWindow w = build_window(0, {0.0}, meta);
        REQUIRE(w.x_up == 0.5);
        REQUIRE(w.x_lo == -0.5);
    }
    SECTION("zero variance raises ZeroVarianceCovariate") {
        const TrainMeta meta = continuous_meta(1.0, 0.0, 1.0, 1.0);
        REQUIRE_THROWS_MATCHES(build_window(0, {1.0}, meta), Error,
                               Catch::Matchers::Predicate<Error>([](const Error& e) {
                                   return e.code() == "ZeroVarianceCovariate";
                               }));
    }
    SECTION("categorical windows") {
        TrainMeta meta;
        meta.col_names = {"c"};
        meta.categorical_mask = {true};
        meta.mean = {2.6};
        meta.sd = {1.1};
        meta.min = {0.0};
        meta.max = {4.0};
        const EvalWindow frac = build_window(0, {2.6}, meta);  // non-integer point
        REQUIRE(frac.x_up == 3.0);
        REQUIRE(frac.x_lo == 2.0);
        REQUIRE(frac.is_discrete);
        const EvalWindow integer = build_window(0, {2.0}, meta);  // unit step below
        REQUIRE(integer.x_up == 2.0);
        REQUIRE(integer.x_lo == 1.0);
        const EvalWindow at_min = build_window(0, {0.0}, meta);  // step up from the minimum
        REQUIRE(at_min.x_up == 1.0);
        REQUIRE(at_min.x_lo == 0.0);
    }
}

TEST_CASE("linear stub model: finite difference recovers the slope exactly", "[effects][oracle]") {
    // P(class 1 | x) = 0.5 + s * x, P(class 2 | x) the complement: the
    // discrete derivative equals s for any window width.
    const double slope = 0.04;
    detail::ProbFn stub = [slope](const std::vector<double>& x) {
        return std::vector<double>{0.5 + slope * x[0], 0.5 - slope * x[0]};
    };
    Matrix data(3, 1);
    data(0, 0) = -0.5;
    data(1, 0) = 0.2;
    data(2, 0) = 0.9;

    const TrainMeta narrow = continuous_meta(0.0, 1.0, -3.0, 3.0);
    const TrainMeta wide = continuous_meta(0.0, 2.0, -3.0, 3.0);  // doubled window width

    for (EvalKind kind : {EvalKind::mean_effect, EvalKind::effect_at_mean}) {
        const EffectsTable t1 = marginal_effects_generic(stub, data, narrow, 2, kind);
        const EffectsTable t2 = marginal_effects_generic(stub, data, wide, 2, kind);
        REQUIRE(t1.at(0, 1).effect == Approx(slope).margin(1e-12));
        REQUIRE(t1.at(0, 2).effect == Approx(-slope).margin(1e-12));
        // scaling consistency: window width drops out for a linear predictor
        REQUIRE(t2.at(0, 1).effect == Approx(t1.at(0, 1).effect).margin(1e-12));
    }
}

TEST_CASE("forest marginal effects sum to zero across classes", "[effects][property]") {
    const Dataset ds = random_ordered_data(80, 3, 3, 501);
    ForestParams params;
    params.n_trees = 25;
    params.seed = 61;
    const OrderedForestModel model = fit_ordered_forest(ds, params);
    for (EvalKind kind : {EvalKind::mean_effect, EvalKind::effect_at_mean}) {
        const EffectsTable table = marginal_effects(model, ds, kind);
        for (std::size_t k = 0; k < ds.n_cols(); ++k) {
            double sum = 0.0;
            for (int m = 1; m <= 3; ++m) sum += table.at(static_cast<int>(k), m).effect;
            REQUIRE(std::fabs(sum) <= 1e-10);
        }
    }
}

TEST_CASE("discrete effects are probability differences within [-1, 1]", "[effects]") {
    // third covariate binary
    std::mt19937_64 rng(511);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const std::size_t n = 90;
    Matrix X(n, 3);
    std::vector<int> y(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        X(i, 0) = normal(rng);
        X(i, 1) = normal(rng);
        X(i, 2) = coin(rng) ? 1.0 : 0.0;
        const double latent = X(i, 0) + 0.8 * X(i, 2) + std::log(unif(rng) / (1.0 - unif(rng)));
        y[i] = latent <= -0.5 ? 1 : (latent <= 0.8 ? 2 : 3);
    }
    for (int m = 1; m <= 3; ++m) y[static_cast<std::size_t>(m - 1)] = m;
    const Dataset ds = make_dataset(std::move(X), std::move(y), 3, {false, false, true});
    ForestParams params;
    params.n_trees = 25;
    const OrderedForestModel model = fit_ordered_forest(ds, params);
    const EffectsTable table = marginal_effects(model, ds, EvalKind::mean_effect);
    for (int m = 1; m <= 3; ++m) {
        const double e = table.at(2, m).effect;
        REQUIRE(e >= -1.0);
        REQUIRE(e <= 1.0);
    }
}

TEST_CASE("with_inference demands an inference-ready ordered model", "[effects]") {
    const Dataset ds = random_ordered_data(60, 3, 3, 521);
    ForestParams params;
    params.n_trees = 10;
    const OrderedForestModel plain = fit_ordered_forest(ds, params);
    REQUIRE_THROWS_MATCHES(marginal_effects(plain, ds, EvalKind::mean_effect, true), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.code() == "NotInferenceReady";
                           }));
    const OrderedForestModel multi =
        fit_ordered_forest(ds, params, Variant::multinomial, true);
    REQUIRE_THROWS_MATCHES(marginal_effects(multi, ds, EvalKind::mean_effect, true), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.code() == "NotInferenceReady";
                           }));
}

TEST_CASE("inference effects carry standard errors, t and p values", "[effects][inference]") {
    const Dataset ds = random_ordered_data(100, 3, 3, 531);
    ForestParams params;
    params.n_trees = 30;
    params.honest = true;
    params.seed = 41;
    const OrderedForestModel model = fit_ordered_forest(ds, params, Variant::ordered, true);

    for (EvalKind kind : {EvalKind::mean_effect, EvalKind::effect_at_mean}) {
        const EffectsTable table = marginal_effects(model, ds, kind, true);
        for (const auto& cell : table.cells) {
            REQUIRE(cell.has_se);
            REQUIRE(cell.std_error >= 0.0);
            REQUIRE(cell.p_value >= 0.0);
            REQUIRE(cell.p_value <= 1.0);
        }
        // zero-sum carries over with inference switched on
        for (std::size_t k = 0; k < ds.n_cols(); ++k) {
            double sum = 0.0;
            for (int m = 1; m <= 3; ++m) sum += table.at(static_cast<int>(k), m).effect;
            REQUIRE(std::fabs(sum) <= 1e-10);
        }
    }
}

TEST_CASE("pure-noise covariate shows no significant effects", "[effects][statistical]") {
    // column 2 never enters the outcome; its |t| should stay modest
    std::mt19937_64 rng(541);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t n = 400;
    Matrix X(n, 3);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) X(i, static_cast<std::size_t>(c)) = normal(rng);
        const double latent = X(i, 0) + std::log(unif(rng) / (1.0 - unif(rng)));
        y[i] = latent <= -0.6 ? 1 : (latent <= 0.7 ? 2 : 3);
    }
    for (int m = 1; m <= 3; ++m) y[static_cast<std::size_t>(m - 1)] = m;
    const Dataset ds = make_dataset(std::move(X), std::move(y), 3);
    ForestParams params;
    params.n_trees = 200;
    params.honest = true;
    params.seed = 97;
    const OrderedForestModel model = fit_ordered_forest(ds, params, Variant::ordered, true);
    const EffectsTable table = marginal_effects(model, ds, EvalKind::mean_effect, true);
    for (int m = 1; m <= 3; ++m) REQUIRE(std::fabs(table.at(2, m).t_value) < 4.0);
}

TEST_CASE("zero-variance covariate yields zero effect with absent se", "[effects]") {
    Dataset ds = random_ordered_data(50, 3, 3, 551);
    for (std::size_t i = 0; i < ds.n_rows(); ++i) ds.X(i, 1) = 7.0;  // constant column
    ForestParams params;
    params.n_trees = 10;
    const OrderedForestModel model = fit_ordered_forest(ds, params);
    const EffectsTable table = marginal_effects(model, ds, EvalKind::mean_effect);
    for (int m = 1; m <= 3; ++m) {
        REQUIRE(table.at(1, m).effect == 0.0);
        REQUIRE_FALSE(table.at(1, m).has_se);
        REQUIRE(table.at(1, m).degenerate);
    }
}
