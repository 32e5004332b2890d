#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "orf/common.hpp"
#include "orf/dataset.hpp"
#include "orf/forest.hpp"
#include "orf/parallel.hpp"

namespace orf {

enum class Variant { ordered, multinomial };

inline const char* variant_name(Variant v) {
    return v == Variant::ordered ? "ordered" : "multinomial";
}

// Ordered forest: one binary regression forest per cumulative indicator
// 1{Y <= m}, m = 1..M-1; class probabilities by differencing adjacent
// cumulative predictions. Multinomial variant: one forest per one-hot
// indicator 1{Y = m}, m = 1..M.
struct OrderedForestModel {
    Variant variant = Variant::ordered;
    int n_classes = 0;
    std::vector<Forest> forests;  // M-1 (ordered) or M (multinomial)
    std::vector<long long> class_map;
    bool honest = false;
    bool inference_ready = false;
    TrainMeta train_meta;
    std::vector<std::string> warnings;

    // Inference bookkeeping (inference_ready only): forests are grown on
    // half 1; weights and outcomes for estimation come from half 2.
    std::vector<bool> half_assignments;   // length N, true = half 1 (forest building)
    Matrix half2_X;                       // covariates of half 2
    std::vector<int> half2_y;             // labels of half 2
    std::vector<LeafIndex> half2_index;   // per forest: leaf membership of half 2
    std::vector<std::vector<double>> half2_indicators;  // per forest: indicator outcomes of half 2

    std::size_t n_forests() const { return forests.size(); }
};

// Binary indicator outcomes. Ordered: Y_m = 1{Y <= m} for m = 1..M-1;
// multinomial: Y_m = 1{Y = m} for m = 1..M.
inline std::vector<std::vector<double>> make_indicators(const std::vector<int>& y, int n_classes,
                                                        Variant variant) {
    const int k = variant == Variant::ordered ? n_classes - 1 : n_classes;
    std::vector<std::vector<double>> out(static_cast<std::size_t>(k));
    for (int m = 1; m <= k; ++m) {
        auto& v = out[static_cast<std::size_t>(m - 1)];
        v.reserve(y.size());
        for (int label : y)
            v.push_back(variant == Variant::ordered ? (label <= m ? 1.0 : 0.0)
                                                    : (label == m ? 1.0 : 0.0));
    }
    return out;
}

// Turns raw cumulative predictions (ordered variant) into a probability row:
// difference adjacent cumulatives, clamp negatives to zero, renormalize.
inline std::vector<double> probs_from_cumulative(const std::vector<double>& cumulative) {
    const std::size_t m1 = cumulative.size();  // M - 1 entries
    std::vector<double> p(m1 + 1, 0.0);
    p[0] = cumulative[0];
    for (std::size_t m = 1; m < m1; ++m) p[m] = cumulative[m] - cumulative[m - 1];
    p[m1] = 1.0 - cumulative[m1 - 1];

    bool clamped = false;
    double sum = 0.0;
    for (double& v : p) {
        if (v < 0.0) {
            v = 0.0;
            clamped = true;
        }
        sum += v;
    }
    if (clamped || std::fabs(sum - 1.0) > 1e-15) {
        for (double& v : p) v /= sum;
    }
    return p;
}

// Multinomial rows only need the normalization step.
inline std::vector<double> probs_from_direct(const std::vector<double>& raw) {
    std::vector<double> p = raw;
    double sum = 0.0;
    for (double v : p) sum += v;
    if (sum <= 0.0) {
        const double u = 1.0 / static_cast<double>(p.size());
        for (double& v : p) v = u;
        return p;
    }
    for (double& v : p) v /= sum;
    return p;
}

inline OrderedForestModel fit_ordered_forest(const Dataset& ds, ForestParams params,
                                             Variant variant = Variant::ordered,
                                             bool inference = false) {
    ds.validate();
    OrderedForestModel model;
    model.variant = variant;
    model.n_classes = ds.n_classes;
    model.class_map = ds.class_map;
    model.honest = params.honest;
    model.inference_ready = inference;
    model.train_meta = compute_train_meta(ds);

    std::vector<int> class_counts(static_cast<std::size_t>(ds.n_classes), 0);
    for (int label : ds.y) ++class_counts[static_cast<std::size_t>(label - 1)];
    for (int m = 0; m < ds.n_classes; ++m)
        if (class_counts[static_cast<std::size_t>(m)] < params.min_leaf)
            model.warnings.push_back("ClassTooSmall: class " + std::to_string(m + 1) + " has " +
                                     std::to_string(class_counts[static_cast<std::size_t>(m)]) +
                                     " observations (< min_leaf)");

    Matrix X_fit = ds.X;
    std::vector<int> y_fit = ds.y;
    if (inference) {
        model.half_assignments = split_halves(ds.n_rows(), params.seed);
        std::vector<int> h1, h2;
        for (std::size_t i = 0; i < ds.n_rows(); ++i)
            (model.half_assignments[i] ? h1 : h2).push_back(static_cast<int>(i));
        X_fit = Matrix(h1.size(), ds.n_cols());
        y_fit.resize(h1.size());
        for (std::size_t i = 0; i < h1.size(); ++i) {
            X_fit.set_row(i, ds.X.row_copy(static_cast<std::size_t>(h1[i])));
            y_fit[i] = ds.y[static_cast<std::size_t>(h1[i])];
        }
        model.half2_X = Matrix(h2.size(), ds.n_cols());
        model.half2_y.resize(h2.size());
        for (std::size_t i = 0; i < h2.size(); ++i) {
            model.half2_X.set_row(i, ds.X.row_copy(static_cast<std::size_t>(h2[i])));
            model.half2_y[i] = ds.y[static_cast<std::size_t>(h2[i])];
        }
    }

    const auto indicators = make_indicators(y_fit, ds.n_classes, variant);
    model.forests.resize(indicators.size());
    // Member forests share the per-tree RNG streams: tree b of every forest
    // draws the same resampling and the same split candidates.
    for (std::size_t m = 0; m < indicators.size(); ++m)
        model.forests[m] = fit_forest(X_fit, indicators[m], params);

    if (inference) {
        model.half2_indicators = make_indicators(model.half2_y, ds.n_classes, variant);
        model.half2_index.resize(model.forests.size());
        for (std::size_t m = 0; m < model.forests.size(); ++m)
            model.half2_index[m] = build_leaf_index(model.forests[m], model.half2_X, params.n_threads);
    }
    return model;
}

// Raw per-forest predictions (cumulative for ordered, one-hot means for
// multinomial) before differencing/normalization.
inline Matrix predict_raw(const OrderedForestModel& model, const Matrix& X, bool oob = false,
                          int n_threads = 0) {
    require(X.cols() == model.train_meta.n_cols(), "ColumnMismatch",
            "prediction matrix has " + std::to_string(X.cols()) + " columns, model was trained on " +
                std::to_string(model.train_meta.n_cols()));
    require(!(oob && model.inference_ready), "BadParams",
            "out-of-bag prediction is not defined for half-sample inference models");
    Matrix raw(X.rows(), model.n_forests());
    if (model.inference_ready) {
        parallel_for(X.rows(), n_threads, [&](std::size_t r) {
            for (std::size_t m = 0; m < model.n_forests(); ++m)
                raw(r, m) = predict(model.forests[m], X.row(r), model.half2_index[m],
                                    model.half2_indicators[m]);
        });
    } else if (oob) {
        for (std::size_t m = 0; m < model.n_forests(); ++m) {
            const std::vector<double> col = predict_oob(model.forests[m], X, n_threads);
            for (std::size_t r = 0; r < X.rows(); ++r) raw(r, m) = col[r];
        }
    } else {
        for (std::size_t m = 0; m < model.n_forests(); ++m) {
            const std::vector<double> col = predict_rows(model.forests[m], X, n_threads);
            for (std::size_t r = 0; r < X.rows(); ++r) raw(r, m) = col[r];
        }
    }
    return raw;
}

// Conditional class probabilities, one row per row of X; rows sum to one.
inline Matrix predict_proba(const OrderedForestModel& model, const Matrix& X, bool oob = false,
                            int n_threads = 0) {
    const Matrix raw = predict_raw(model, X, oob, n_threads);
    Matrix probs(X.rows(), static_cast<std::size_t>(model.n_classes));
    for (std::size_t r = 0; r < X.rows(); ++r) {
        const std::vector<double> row = raw.row_copy(r);
        const std::vector<double> p = model.variant == Variant::ordered
                                          ? probs_from_cumulative(row)
                                          : probs_from_direct(row);
        probs.set_row(r, p);
    }
    return probs;
}

}  // namespace orf
