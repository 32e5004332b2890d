#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orf/common.hpp"
#include "orf/dataset.hpp"
#include "orf/ologit.hpp"
#include "orf/ordered_forest.hpp"

namespace orf {

enum class EstimatorKind { ologit, ordered, ordered_honest, multinomial, multinomial_honest };

inline const char* estimator_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::ologit: return "ologit";
        case EstimatorKind::ordered: return "ordered";
        case EstimatorKind::ordered_honest: return "ordered_honest";
        case EstimatorKind::multinomial: return "multinomial";
        default: return "multinomial_honest";
    }
}

inline EstimatorKind parse_estimator(const std::string& name) {
    if (name == "ologit") return EstimatorKind::ologit;
    if (name == "ordered") return EstimatorKind::ordered;
    if (name == "ordered_honest") return EstimatorKind::ordered_honest;
    if (name == "multinomial") return EstimatorKind::multinomial;
    if (name == "multinomial_honest") return EstimatorKind::multinomial_honest;
    throw Error("BadParams", "unknown estimator '" + name + "'");
}

struct FitPredictResult {
    Matrix probs;
    bool converged = true;  // ologit only
};

// Fits one estimator on the training data and predicts class probabilities
// for X_test. Forest estimators inherit `base` with the mode bits and seed
// replaced; the ologit ignores forest parameters.
inline FitPredictResult fit_predict(EstimatorKind kind, const Dataset& train, const Matrix& X_test,
                                    ForestParams base, std::uint64_t seed,
                                    const OlogitOptions& ologit_opts = {}) {
    FitPredictResult res;
    if (kind == EstimatorKind::ologit) {
        const OlogitModel model = fit_ologit(train, ologit_opts);
        res.probs = predict_proba_ologit(model, X_test);
        res.converged = model.converged;
        return res;
    }
    base.seed = seed;
    base.honest = kind == EstimatorKind::ordered_honest || kind == EstimatorKind::multinomial_honest;
    const Variant variant =
        (kind == EstimatorKind::ordered || kind == EstimatorKind::ordered_honest)
            ? Variant::ordered
            : Variant::multinomial;
    const OrderedForestModel model = fit_ordered_forest(train, base, variant, false);
    res.probs = predict_proba(model, X_test, false, base.n_threads);
    return res;
}

}  // namespace orf
