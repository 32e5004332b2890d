#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "orf/common.hpp"
#include "orf/ordered_forest.hpp"

namespace orf {

// Difference weights behind one marginal-effect cell (covariate window x
// class m). The class-m probability is a difference of adjacent cumulative
// predictions, so up to two weighted sums contribute: indicator m (absent for
// m = M) and indicator m-1 (absent for m = 1).
struct DiffWeights {
    std::vector<double> w_m;        // weight differences of indicator m, empty if absent
    std::vector<double> w_m_minus;  // weight differences of indicator m-1, empty if absent
    std::vector<double> y_m;        // half-2 outcomes of indicator m
    std::vector<double> y_m_minus;
    double scale = 1.0;             // x_up - x_lo, 1 for discrete covariates
};

// Variance of the weighted-sum representation of a marginal effect:
// N/(N-1) * 1/scale^2 * (S_m + S_{m-1} - 2 * S_cross) with centered sums over
// the products w~ * y. Single-term for the boundary classes.
inline double variance_me(const DiffWeights& dw) {
    require(dw.scale > 0.0, "BadParams", "variance_me needs a positive scale");
    const bool has_m = !dw.w_m.empty();
    const bool has_m_minus = !dw.w_m_minus.empty();
    const std::size_t n = has_m ? dw.w_m.size() : dw.w_m_minus.size();
    if (n < 2) return 0.0;
    if (has_m)
        require(dw.w_m.size() == dw.y_m.size(), "LengthMismatch", "w_m and y_m differ in length");
    if (has_m_minus)
        require(dw.w_m_minus.size() == dw.y_m_minus.size(), "LengthMismatch",
                "w_m_minus and y_m_minus differ in length");
    if (has_m && has_m_minus)
        require(dw.w_m.size() == dw.w_m_minus.size(), "LengthMismatch",
                "weight vectors differ in length");

    const double inv_n = 1.0 / static_cast<double>(n);
    double mean_m = 0.0, mean_m_minus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (has_m) mean_m += dw.w_m[i] * dw.y_m[i];
        if (has_m_minus) mean_m_minus += dw.w_m_minus[i] * dw.y_m_minus[i];
    }
    mean_m *= inv_n;
    mean_m_minus *= inv_n;

    double s_m = 0.0, s_m_minus = 0.0, s_cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d_m = has_m ? dw.w_m[i] * dw.y_m[i] - mean_m : 0.0;
        const double d_mm = has_m_minus ? dw.w_m_minus[i] * dw.y_m_minus[i] - mean_m_minus : 0.0;
        s_m += d_m * d_m;
        s_m_minus += d_mm * d_mm;
        s_cross += d_m * d_mm;
    }
    double var = s_m + s_m_minus;
    if (has_m && has_m_minus) var -= 2.0 * s_cross;
    var *= static_cast<double>(n) / static_cast<double>(n - 1);
    var /= dw.scale * dw.scale;
    return std::max(var, 0.0);
}

struct EffectStats {
    double std_error = 0.0;
    double t_value = 0.0;
    double p_value = 1.0;
    bool degenerate = false;  // se = 0 with a nonzero effect
};

inline EffectStats summarize(double effect, double variance) {
    require(variance >= 0.0, "NegativeVariance", "variance must be nonnegative");
    EffectStats st;
    st.std_error = std::sqrt(variance);
    if (st.std_error == 0.0) {
        if (effect == 0.0) {
            st.t_value = 0.0;
            st.p_value = 1.0;
        } else {
            st.t_value = effect > 0.0 ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
            st.p_value = 0.0;
            st.degenerate = true;
        }
        return st;
    }
    st.t_value = effect / st.std_error;
    st.p_value = two_sided_p(st.t_value);
    return st;
}

// Weight difference w_j(x_up) - w_j(x_lo) for member forest j, taken over the
// half-2 observations of an inference-ready model.
inline std::vector<double> forest_diff_weights(const OrderedForestModel& model, std::size_t j,
                                               const std::vector<double>& x_up,
                                               const std::vector<double>& x_lo) {
    require(model.inference_ready, "NotInferenceReady",
            "model was not fit with the half-sample inference split");
    const std::vector<double> up =
        extract_weights(model.forests[j], x_up.data(), model.half2_index[j]);
    const std::vector<double> lo =
        extract_weights(model.forests[j], x_lo.data(), model.half2_index[j]);
    std::vector<double> diff(up.size());
    for (std::size_t i = 0; i < up.size(); ++i) diff[i] = up[i] - lo[i];
    return diff;
}

// Assembles DiffWeights for class m (1..M) from per-indicator weight
// differences; used for a single evaluation point. For mean marginal effects
// the caller averages the per-indicator vectors and the scale across
// evaluation points first.
inline DiffWeights assemble_diff_weights(const OrderedForestModel& model, int class_m,
                                         const std::vector<std::vector<double>>& indicator_diffs,
                                         double scale) {
    require(model.variant == Variant::ordered, "NotInferenceReady",
            "weight-based inference is defined for the ordered variant");
    require(class_m >= 1 && class_m <= model.n_classes, "BadParams", "class out of range");
    DiffWeights dw;
    dw.scale = scale;
    const int m_hi = class_m;      // indicator m, present for class <= M-1
    const int m_lo = class_m - 1;  // indicator m-1, present for class >= 2
    if (m_hi <= model.n_classes - 1) {
        dw.w_m = indicator_diffs[static_cast<std::size_t>(m_hi) - 1];
        dw.y_m = model.half2_indicators[static_cast<std::size_t>(m_hi) - 1];
    }
    if (m_lo >= 1) {
        dw.w_m_minus = indicator_diffs[static_cast<std::size_t>(m_lo) - 1];
        dw.y_m_minus = model.half2_indicators[static_cast<std::size_t>(m_lo) - 1];
    }
    return dw;
}

}  // namespace orf
