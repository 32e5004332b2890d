#pragma once

#include <cmath>
#include <vector>

#include "orf/common.hpp"

namespace orf {

struct ScoreReport {
    double arps = 0.0;
    double amse = 0.0;
    std::size_t n = 0;
    int n_classes = 0;
};

// Ranked probability score of one prediction row against a true probability
// row: mean over classes of the squared cumulative-probability gap, with the
// 1/(M-1) normalizer. The m = M term is identically zero and kept for formula
// fidelity.
inline double rps_row(const std::vector<double>& truth, const std::vector<double>& pred) {
    require(truth.size() == pred.size() && truth.size() >= 2, "LengthMismatch",
            "rps_row needs equal-length rows with M >= 2");
    double f_true = 0.0, f_pred = 0.0, acc = 0.0;
    for (std::size_t m = 0; m < truth.size(); ++m) {
        f_true += truth[m];
        f_pred += pred[m];
        acc += (f_true - f_pred) * (f_true - f_pred);
    }
    return acc / static_cast<double>(truth.size() - 1);
}

// Realized-class truth: the true cdf is the step function at the class.
inline double rps_row(int true_class, const std::vector<double>& pred) {
    require(!pred.empty() && true_class >= 1 && static_cast<std::size_t>(true_class) <= pred.size(),
            "LengthMismatch", "true class out of range of the prediction row");
    double f_pred = 0.0, acc = 0.0;
    for (std::size_t m = 0; m < pred.size(); ++m) {
        f_pred += pred[m];
        const double f_true = (static_cast<int>(m) + 1 >= true_class) ? 1.0 : 0.0;
        acc += (f_true - f_pred) * (f_true - f_pred);
    }
    return acc / static_cast<double>(pred.size() - 1);
}

// Mean squared probability error against a true probability row.
inline double mse_row(const std::vector<double>& truth, const std::vector<double>& pred) {
    require(truth.size() == pred.size() && !truth.empty(), "LengthMismatch",
            "mse_row needs equal-length rows");
    double acc = 0.0;
    for (std::size_t m = 0; m < truth.size(); ++m)
        acc += (truth[m] - pred[m]) * (truth[m] - pred[m]);
    return acc / static_cast<double>(truth.size());
}

// Realized-class truth uses the one-hot probability row.
inline double mse_row(int true_class, const std::vector<double>& pred) {
    require(!pred.empty() && true_class >= 1 && static_cast<std::size_t>(true_class) <= pred.size(),
            "LengthMismatch", "true class out of range of the prediction row");
    double acc = 0.0;
    for (std::size_t m = 0; m < pred.size(); ++m) {
        const double t = (static_cast<int>(m) + 1 == true_class) ? 1.0 : 0.0;
        acc += (t - pred[m]) * (t - pred[m]);
    }
    return acc / static_cast<double>(pred.size());
}

// Row-wise scores averaged over a prediction matrix against true
// probabilities (simulation use) ...
inline ScoreReport score_against_probs(const Matrix& truth, const Matrix& pred) {
    require(truth.rows() == pred.rows() && truth.cols() == pred.cols(), "LengthMismatch",
            "score matrices differ in shape");
    ScoreReport rep;
    rep.n = truth.rows();
    rep.n_classes = static_cast<int>(truth.cols());
    for (std::size_t r = 0; r < truth.rows(); ++r) {
        rep.arps += rps_row(truth.row_copy(r), pred.row_copy(r));
        rep.amse += mse_row(truth.row_copy(r), pred.row_copy(r));
    }
    rep.arps /= static_cast<double>(rep.n);
    rep.amse /= static_cast<double>(rep.n);
    return rep;
}

// ... or against realized classes (empirical use).
inline ScoreReport score_against_classes(const std::vector<int>& classes, const Matrix& pred) {
    require(classes.size() == pred.rows(), "LengthMismatch",
            "label count and prediction rows differ");
    ScoreReport rep;
    rep.n = classes.size();
    rep.n_classes = static_cast<int>(pred.cols());
    for (std::size_t r = 0; r < pred.rows(); ++r) {
        rep.arps += rps_row(classes[r], pred.row_copy(r));
        rep.amse += mse_row(classes[r], pred.row_copy(r));
    }
    rep.arps /= static_cast<double>(rep.n);
    rep.amse /= static_cast<double>(rep.n);
    return rep;
}

}  // namespace orf
