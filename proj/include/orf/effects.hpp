#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "orf/common.hpp"
#include "orf/dataset.hpp"
#include "orf/inference.hpp"
#include "orf/ologit.hpp"
#include "orf/ordered_forest.hpp"

namespace orf {

enum class EvalKind { mean_effect, effect_at_mean, at_point };

inline const char* eval_kind_name(EvalKind k) {
    switch (k) {
        case EvalKind::mean_effect: return "mean_effect";
        case EvalKind::effect_at_mean: return "effect_at_mean";
        default: return "at_point";
    }
}

// Evaluation window of a marginal effect for one covariate. Continuous
// covariates move 0.1 training standard deviations in both directions within
// the observed support; categorical covariates take a unit step; binary ones
// contrast 1 against 0.
struct EvalWindow {
    double x_up = 0.0;
    double x_lo = 0.0;
    bool is_discrete = false;

    double scale() const { return is_discrete ? 1.0 : x_up - x_lo; }
};

inline EvalWindow build_window(std::size_t k, const std::vector<double>& x, const TrainMeta& meta) {
    require(k < meta.n_cols(), "BadParams", "covariate index out of range");
    const double sd = meta.sd[k];
    const double lo_support = meta.min[k];
    const double hi_support = meta.max[k];
    require(sd > 0.0, "ZeroVarianceCovariate",
            "covariate '" + meta.col_names[k] + "' has zero variance");
    EvalWindow w;
    const double xk = x[k];

    const bool is_binary = meta.categorical_mask[k] && lo_support == 0.0 && hi_support == 1.0;
    if (is_binary) {
        w.x_up = 1.0;
        w.x_lo = 0.0;
        w.is_discrete = true;
        return w;
    }
    if (meta.categorical_mask[k]) {
        double up = std::ceil(xk);
        double lo = std::floor(xk);
        if (up == lo) {  // integer evaluation point: take the unit step below,
            lo = up - 1.0;
            if (lo < lo_support) {  // or above when sitting on the support minimum
                lo = xk;
                up = xk + 1.0;
            }
        }
        w.x_up = std::min(up, hi_support);
        w.x_lo = std::max(lo, lo_support);
        w.is_discrete = true;
        return w;
    }

    const double half = 0.1 * sd;
    const double width = std::min(2.0 * half, hi_support - lo_support);
    double up = std::min(xk + half, hi_support);
    double lo = std::max(xk - half, lo_support);
    if (up - lo < width) {  // clamped at a boundary: shift inward to full width
        if (up >= hi_support)
            lo = hi_support - width;
        else if (lo <= lo_support)
            up = lo_support + width;
    }
    w.x_up = up;
    w.x_lo = lo;
    w.is_discrete = false;
    return w;
}

struct EffectCell {
    int covariate = 0;  // 0-based column index
    int cls = 1;        // class 1..M
    double effect = 0.0;
    bool has_se = false;
    double std_error = 0.0;
    double t_value = 0.0;
    double p_value = 1.0;
    bool degenerate = false;
};

struct EffectsTable {
    EvalKind eval_kind = EvalKind::mean_effect;
    std::vector<std::string> col_names;
    std::vector<long long> class_map;
    std::vector<EffectCell> cells;  // ordered by covariate, then class

    const EffectCell& at(int covariate, int cls) const {
        for (const auto& c : cells)
            if (c.covariate == covariate && c.cls == cls) return c;
        throw Error("BadParams", "no such effects cell");
    }
};

namespace detail {

// Probability predictor for a single point; lets the effect arithmetic be
// shared between model types (and stubbed in tests).
using ProbFn = std::function<std::vector<double>(const std::vector<double>&)>;

inline std::vector<double> effect_for_window(const ProbFn& predict, std::vector<double> x,
                                             std::size_t k, const EvalWindow& w) {
    x[k] = w.x_up;
    const std::vector<double> up = predict(x);
    x[k] = w.x_lo;
    const std::vector<double> lo = predict(x);
    std::vector<double> eff(up.size());
    for (std::size_t m = 0; m < up.size(); ++m) eff[m] = (up[m] - lo[m]) / w.scale();
    return eff;
}

}  // namespace detail

// Marginal effects computed from any probability predictor. Covariates with
// zero training variance get zero effects. Evaluation points come from
// `data`; window geometry comes from `meta`.
inline EffectsTable marginal_effects_generic(const detail::ProbFn& predict, const Matrix& data,
                                             const TrainMeta& meta, int n_classes,
                                             EvalKind eval_kind) {
    EffectsTable table;
    table.eval_kind = eval_kind;
    table.col_names = meta.col_names;

    std::vector<double> mean_row(meta.n_cols(), 0.0);
    for (std::size_t c = 0; c < meta.n_cols(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < data.rows(); ++r) s += data(r, c);
        mean_row[c] = s / static_cast<double>(data.rows());
    }

    for (std::size_t k = 0; k < meta.n_cols(); ++k) {
        std::vector<double> eff(static_cast<std::size_t>(n_classes), 0.0);
        bool zero_variance = meta.sd[k] <= 0.0;
        if (!zero_variance) {
            if (eval_kind == EvalKind::mean_effect) {
                for (std::size_t r = 0; r < data.rows(); ++r) {
                    const std::vector<double> x = data.row_copy(r);
                    const EvalWindow w = build_window(k, x, meta);
                    const std::vector<double> e = detail::effect_for_window(predict, x, k, w);
                    for (std::size_t m = 0; m < e.size(); ++m) eff[m] += e[m];
                }
                for (double& v : eff) v /= static_cast<double>(data.rows());
            } else {
                const EvalWindow w = build_window(k, mean_row, meta);
                eff = detail::effect_for_window(predict, mean_row, k, w);
            }
        }
        for (int m = 1; m <= n_classes; ++m) {
            EffectCell cell;
            cell.covariate = static_cast<int>(k);
            cell.cls = m;
            cell.effect = eff[static_cast<std::size_t>(m) - 1];
            cell.degenerate = zero_variance;
            table.cells.push_back(cell);
        }
    }
    return table;
}

// Spec-shaped single-point DiffWeights builder (inference-ready models only).
inline DiffWeights build_diff_weights(const OrderedForestModel& model, std::size_t k, int class_m,
                                      const EvalWindow& w, std::vector<double> x) {
    require(model.inference_ready, "NotInferenceReady",
            "model was not fit with the half-sample inference split");
    std::vector<double> x_up = x, x_lo = x;
    x_up[k] = w.x_up;
    x_lo[k] = w.x_lo;
    std::vector<std::vector<double>> diffs(model.n_forests());
    for (std::size_t j = 0; j < model.n_forests(); ++j)
        diffs[j] = forest_diff_weights(model, j, x_up, x_lo);
    return assemble_diff_weights(model, class_m, diffs, w.scale());
}

// Ordered/multinomial forest marginal effects; standard errors via the
// weight-based variance estimator when requested.
inline EffectsTable marginal_effects(const OrderedForestModel& model, const Dataset& data,
                                     EvalKind eval_kind, bool with_inference = false,
                                     int n_threads = 0) {
    require(data.n_cols() == model.train_meta.n_cols(), "ColumnMismatch",
            "effects data has a different column count than the training data");
    if (with_inference) {
        require(model.inference_ready, "NotInferenceReady",
                "refit with inference=true to get standard errors");
        require(model.variant == Variant::ordered, "NotInferenceReady",
                "weight-based inference is defined for the ordered variant");
    }
    detail::ProbFn predict_one = [&](const std::vector<double>& x) {
        Matrix m(1, x.size());
        m.set_row(0, x);
        return predict_proba(model, m, false, 1).row_copy(0);
    };
    EffectsTable table = marginal_effects_generic(predict_one, data.X, model.train_meta,
                                                  model.n_classes, eval_kind);
    table.class_map = model.class_map;
    if (!with_inference) return table;

    const std::size_t p = model.train_meta.n_cols();
    std::vector<double> mean_row(p, 0.0);
    for (std::size_t c = 0; c < p; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < data.n_rows(); ++r) s += data.X(r, c);
        mean_row[c] = s / static_cast<double>(data.n_rows());
    }

    // Per covariate: indicator-level weight differences, averaged over the
    // evaluation points for mean marginal effects.
    std::vector<std::vector<std::vector<double>>> diffs_per_cov(p);
    std::vector<double> scale_per_cov(p, 1.0);
    std::vector<char> skip(p, 0);  // not vector<bool>: parallel writers
    parallel_for(p, n_threads, [&](std::size_t k) {
        if (model.train_meta.sd[k] <= 0.0) {
            skip[k] = 1;
            return;
        }
        const std::size_t n2 = model.half2_y.size();
        std::vector<std::vector<double>> acc(model.n_forests(), std::vector<double>(n2, 0.0));
        double scale_acc = 0.0;
        if (eval_kind == EvalKind::mean_effect) {
            for (std::size_t r = 0; r < data.n_rows(); ++r) {
                std::vector<double> x = data.X.row_copy(r);
                const EvalWindow w = build_window(k, x, model.train_meta);
                std::vector<double> x_up = x, x_lo = x;
                x_up[k] = w.x_up;
                x_lo[k] = w.x_lo;
                for (std::size_t j = 0; j < model.n_forests(); ++j) {
                    const std::vector<double> d = forest_diff_weights(model, j, x_up, x_lo);
                    for (std::size_t i = 0; i < n2; ++i) acc[j][i] += d[i];
                }
                scale_acc += w.scale();
            }
            const double inv = 1.0 / static_cast<double>(data.n_rows());
            for (auto& vec : acc)
                for (double& v : vec) v *= inv;
            scale_per_cov[k] = scale_acc * inv;
        } else {
            const EvalWindow w = build_window(k, mean_row, model.train_meta);
            std::vector<double> x_up = mean_row, x_lo = mean_row;
            x_up[k] = w.x_up;
            x_lo[k] = w.x_lo;
            for (std::size_t j = 0; j < model.n_forests(); ++j)
                acc[j] = forest_diff_weights(model, j, x_up, x_lo);
            scale_per_cov[k] = w.scale();
        }
        diffs_per_cov[k] = std::move(acc);
    });

    for (auto& cell : table.cells) {
        const std::size_t k = static_cast<std::size_t>(cell.covariate);
        if (skip[k]) continue;
        const DiffWeights dw =
            assemble_diff_weights(model, cell.cls, diffs_per_cov[k], scale_per_cov[k]);
        const EffectStats st = summarize(cell.effect, variance_me(dw));
        cell.has_se = true;
        cell.std_error = st.std_error;
        cell.t_value = st.t_value;
        cell.p_value = st.p_value;
        cell.degenerate = cell.degenerate || st.degenerate;
    }
    return table;
}

// Ordered-logit marginal effects: analytic derivative for continuous
// covariates, discrete window differences for categorical ones. No standard
// errors.
inline EffectsTable marginal_effects(const OlogitModel& model, const Dataset& data,
                                     EvalKind eval_kind) {
    require(data.n_cols() == model.beta.size(), "ColumnMismatch",
            "effects data has a different column count than the training data");
    const TrainMeta& meta = model.train_meta;
    const int M = model.n_classes;

    auto analytic_me = [&](const std::vector<double>& x, std::size_t k) {
        double eta = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) eta += x[c] * model.beta[c];
        std::vector<double> out(static_cast<std::size_t>(M), 0.0);
        for (int m = 1; m <= M; ++m) {
            const double pdf_lo =
                m > 1 ? logistic_pdf(model.alpha[static_cast<std::size_t>(m) - 2] - eta) : 0.0;
            const double pdf_hi =
                m < M ? logistic_pdf(model.alpha[static_cast<std::size_t>(m) - 1] - eta) : 0.0;
            out[static_cast<std::size_t>(m) - 1] = (pdf_lo - pdf_hi) * model.beta[k];
        }
        return out;
    };
    detail::ProbFn predict_one = [&](const std::vector<double>& x) {
        return predict_proba_ologit_row(model, x.data());
    };

    std::vector<double> mean_row(meta.n_cols(), 0.0);
    for (std::size_t c = 0; c < meta.n_cols(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < data.n_rows(); ++r) s += data.X(r, c);
        mean_row[c] = s / static_cast<double>(data.n_rows());
    }

    EffectsTable table;
    table.eval_kind = eval_kind;
    table.col_names = meta.col_names;
    table.class_map = model.class_map;
    for (std::size_t k = 0; k < meta.n_cols(); ++k) {
        std::vector<double> eff(static_cast<std::size_t>(M), 0.0);
        const bool zero_variance = meta.sd[k] <= 0.0;
        if (!zero_variance) {
            if (eval_kind == EvalKind::mean_effect) {
                for (std::size_t r = 0; r < data.n_rows(); ++r) {
                    const std::vector<double> x = data.X.row_copy(r);
                    const std::vector<double> e =
                        meta.categorical_mask[k]
                            ? detail::effect_for_window(predict_one, x, k,
                                                        build_window(k, x, meta))
                            : analytic_me(x, k);
                    for (std::size_t m = 0; m < e.size(); ++m) eff[m] += e[m];
                }
                for (double& v : eff) v /= static_cast<double>(data.n_rows());
            } else {
                eff = meta.categorical_mask[k]
                          ? detail::effect_for_window(predict_one, mean_row, k,
                                                      build_window(k, mean_row, meta))
                          : analytic_me(mean_row, k);
            }
        }
        for (int m = 1; m <= M; ++m) {
            EffectCell cell;
            cell.covariate = static_cast<int>(k);
            cell.cls = m;
            cell.effect = eff[static_cast<std::size_t>(m) - 1];
            cell.degenerate = zero_variance;
            table.cells.push_back(cell);
        }
    }
    return table;
}

}  // namespace orf
