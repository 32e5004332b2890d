#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "orf/common.hpp"
#include "orf/dataset.hpp"

namespace orf {

// Proportional-odds model fitted by maximum likelihood. Thresholds are kept
// strictly increasing through the log-gap parameterization
// alpha_m = alpha_1 + sum_{j<=m} exp(gamma_j); the intercept is absorbed in
// the thresholds.
struct OlogitModel {
    std::vector<double> beta;   // p coefficients (original covariate scale)
    std::vector<double> alpha;  // M-1 strictly increasing thresholds
    int n_classes = 0;
    bool converged = false;
    double loglik = 0.0;
    int n_iter = 0;
    std::vector<long long> class_map;
    TrainMeta train_meta;
};

struct OlogitOptions {
    int max_iter = 25;
    double grad_tol = 1e-8;
};

namespace detail {

// Dense symmetric solve of A x = b via Cholesky; returns false when A is not
// positive definite to working precision.
inline bool cholesky_solve(std::vector<double> A, std::vector<double> b, std::size_t d,
                           std::vector<double>& x) {
    for (std::size_t j = 0; j < d; ++j) {
        double diag = A[j * d + j];
        for (std::size_t k = 0; k < j; ++k) diag -= A[j * d + k] * A[j * d + k];
        if (!(diag > 0.0)) return false;
        const double l = std::sqrt(diag);
        A[j * d + j] = l;
        for (std::size_t i = j + 1; i < d; ++i) {
            double v = A[i * d + j];
            for (std::size_t k = 0; k < j; ++k) v -= A[i * d + k] * A[j * d + k];
            A[i * d + j] = v / l;
        }
    }
    for (std::size_t i = 0; i < d; ++i) {  // forward
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= A[i * d + k] * b[k];
        b[i] = v / A[i * d + i];
    }
    x.assign(d, 0.0);
    for (std::size_t ii = d; ii-- > 0;) {  // backward
        double v = b[ii];
        for (std::size_t k = ii + 1; k < d; ++k) v -= A[k * d + ii] * x[k];
        x[ii] = v / A[ii * d + ii];
    }
    return true;
}

struct OlogitObjective {
    const Matrix& Z;             // standardized covariates
    const std::vector<int>& y;   // labels 1..M
    int n_classes;

    std::size_t p() const { return Z.cols(); }
    std::size_t dim() const { return p() + static_cast<std::size_t>(n_classes) - 1; }

    // theta = (beta, alpha_1, gamma_2..gamma_{M-1})
    std::vector<double> thresholds(const std::vector<double>& theta) const {
        std::vector<double> alpha(static_cast<std::size_t>(n_classes - 1));
        alpha[0] = theta[p()];
        for (std::size_t j = 1; j < alpha.size(); ++j)
            alpha[j] = alpha[j - 1] + std::exp(std::min(theta[p() + j], 50.0));
        return alpha;
    }

    double loglik(const std::vector<double>& theta) const {
        const std::vector<double> alpha = thresholds(theta);
        double ll = 0.0;
        for (std::size_t i = 0; i < Z.rows(); ++i) {
            double eta = 0.0;
            for (std::size_t c = 0; c < p(); ++c) eta += Z(i, c) * theta[c];
            const int yi = y[i];
            const double hi = yi < n_classes ? logistic_cdf(alpha[static_cast<std::size_t>(yi) - 1] - eta) : 1.0;
            const double lo = yi > 1 ? logistic_cdf(alpha[static_cast<std::size_t>(yi) - 2] - eta) : 0.0;
            ll += std::log(std::max(hi - lo, 1e-300));
        }
        return ll;
    }

    // Analytic gradient and Hessian of the log likelihood in theta.
    void derivatives(const std::vector<double>& theta, std::vector<double>& grad,
                     std::vector<double>& hess) const {
        const std::size_t np = p();
        const std::size_t na = static_cast<std::size_t>(n_classes - 1);
        const std::size_t d = dim();
        const std::vector<double> alpha = thresholds(theta);

        std::vector<double> g_a(na, 0.0);             // d/d alpha (natural)
        std::vector<double> g_b(np, 0.0);             // d/d beta
        std::vector<double> H_aa(na * na, 0.0);       // natural-threshold block
        std::vector<double> H_bb(np * np, 0.0);
        std::vector<double> H_ba(np * na, 0.0);

        for (std::size_t i = 0; i < Z.rows(); ++i) {
            const double* z = Z.row(i);
            double eta = 0.0;
            for (std::size_t c = 0; c < np; ++c) eta += z[c] * theta[c];
            const int yi = y[i];
            const bool has_hi = yi < n_classes;
            const bool has_lo = yi > 1;
            const double a2 = has_hi ? alpha[static_cast<std::size_t>(yi) - 1] - eta : 0.0;
            const double a1 = has_lo ? alpha[static_cast<std::size_t>(yi) - 2] - eta : 0.0;
            const double cdf2 = has_hi ? logistic_cdf(a2) : 1.0;
            const double cdf1 = has_lo ? logistic_cdf(a1) : 0.0;
            const double pdf2 = has_hi ? cdf2 * (1.0 - cdf2) : 0.0;
            const double pdf1 = has_lo ? cdf1 * (1.0 - cdf1) : 0.0;
            const double prob = std::max(cdf2 - cdf1, 1e-300);

            const double u = pdf2 / prob;
            const double v = -pdf1 / prob;
            const double dpdf2 = pdf2 * (1.0 - 2.0 * cdf2);
            const double dpdf1 = pdf1 * (1.0 - 2.0 * cdf1);
            const double A = has_hi ? dpdf2 / prob - u * u : 0.0;
            const double B = has_lo ? -dpdf1 / prob - v * v : 0.0;
            const double C = (has_hi && has_lo) ? pdf1 * pdf2 / (prob * prob) : 0.0;

            const double g_eta = -(u + v);
            for (std::size_t c = 0; c < np; ++c) g_b[c] += g_eta * z[c];
            const double h_eta = A + B + 2.0 * C;
            for (std::size_t r = 0; r < np; ++r)
                for (std::size_t c = 0; c <= r; ++c) H_bb[r * np + c] += h_eta * z[r] * z[c];

            if (has_hi) {
                const std::size_t m = static_cast<std::size_t>(yi) - 1;
                g_a[m] += u;
                H_aa[m * na + m] += A;
                for (std::size_t c = 0; c < np; ++c) H_ba[c * na + m] += -(A + C) * z[c];
            }
            if (has_lo) {
                const std::size_t m = static_cast<std::size_t>(yi) - 2;
                g_a[m] += v;
                H_aa[m * na + m] += B;
                for (std::size_t c = 0; c < np; ++c) H_ba[c * na + m] += -(B + C) * z[c];
            }
            if (has_hi && has_lo) {
                const std::size_t m2 = static_cast<std::size_t>(yi) - 1;
                const std::size_t m1 = static_cast<std::size_t>(yi) - 2;
                H_aa[m2 * na + m1] += C;
                H_aa[m1 * na + m2] += C;
            }
        }
        for (std::size_t r = 0; r < np; ++r)
            for (std::size_t c = r + 1; c < np; ++c) H_bb[r * np + c] = H_bb[c * np + r];

        // Chain rule through the log-gap map tau = (alpha_1, gamma_2..):
        // d alpha_m / d alpha_1 = 1, d alpha_m / d gamma_j = e^gamma_j [j <= m].
        std::vector<double> J(na * na, 0.0);  // J[m][j] = d alpha_m / d tau_j
        for (std::size_t m = 0; m < na; ++m) {
            J[m * na + 0] = 1.0;
            for (std::size_t j = 1; j <= m; ++j)
                J[m * na + j] = std::exp(std::min(theta[np + j], 50.0));
        }

        grad.assign(d, 0.0);
        for (std::size_t c = 0; c < np; ++c) grad[c] = g_b[c];
        for (std::size_t j = 0; j < na; ++j) {
            double s = 0.0;
            for (std::size_t m = 0; m < na; ++m) s += g_a[m] * J[m * na + j];
            grad[np + j] = s;
        }

        hess.assign(d * d, 0.0);
        for (std::size_t r = 0; r < np; ++r)
            for (std::size_t c = 0; c < np; ++c) hess[r * d + c] = H_bb[r * np + c];
        for (std::size_t r = 0; r < np; ++r)
            for (std::size_t j = 0; j < na; ++j) {
                double s = 0.0;
                for (std::size_t m = 0; m < na; ++m) s += H_ba[r * na + m] * J[m * na + j];
                hess[r * d + (np + j)] = s;
                hess[(np + j) * d + r] = s;
            }
        for (std::size_t j = 0; j < na; ++j)
            for (std::size_t k = 0; k <= j; ++k) {
                double s = 0.0;
                for (std::size_t m = 0; m < na; ++m) {
                    double t = 0.0;
                    for (std::size_t m2 = 0; m2 < na; ++m2)
                        t += H_aa[m * na + m2] * J[m2 * na + k];
                    s += J[m * na + j] * t;
                }
                hess[(np + j) * d + (np + k)] = s;
                hess[(np + k) * d + (np + j)] = s;
            }
        // Second-derivative correction of the reparameterization:
        // d^2 alpha_m / d gamma_j^2 = e^gamma_j [j <= m].
        for (std::size_t j = 1; j < na; ++j) {
            double s = 0.0;
            for (std::size_t m = j; m < na; ++m) s += g_a[m];
            hess[(np + j) * d + (np + j)] += s * std::exp(std::min(theta[np + j], 50.0));
        }
    }
};

}  // namespace detail

inline OlogitModel fit_ologit(const Dataset& ds, const OlogitOptions& opts = {}) {
    ds.validate();
    const std::size_t n = ds.n_rows();
    const std::size_t p = ds.n_cols();
    require(p >= 1, "EmptyData", "ordered logit needs at least one covariate");
    const int M = ds.n_classes;

    // Standardize internally; report coefficients on the original scale.
    TrainMeta meta = compute_train_meta(ds);
    for (std::size_t c = 0; c < p; ++c)
        require(meta.sd[c] > 0.0, "RankDeficient",
                "covariate '" + meta.col_names[c] + "' is constant");
    Matrix Z(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < p; ++c) Z(i, c) = (ds.X(i, c) - meta.mean[c]) / meta.sd[c];

    {  // collinearity check on the Gram matrix of Z
        std::vector<double> gram(p * p, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t r = 0; r < p; ++r)
                for (std::size_t c = 0; c <= r; ++c) gram[r * p + c] += Z(i, r) * Z(i, c);
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t c = r + 1; c < p; ++c) gram[r * p + c] = gram[c * p + r];
        std::vector<double> chol = gram;
        bool ok = true;
        for (std::size_t j = 0; j < p && ok; ++j) {
            double diag = chol[j * p + j];
            for (std::size_t k = 0; k < j; ++k) diag -= chol[j * p + k] * chol[j * p + k];
            if (diag < 1e-9 * gram[j * p + j]) {
                ok = false;
                break;
            }
            const double l = std::sqrt(diag);
            chol[j * p + j] = l;
            for (std::size_t i = j + 1; i < p; ++i) {
                double v = chol[i * p + j];
                for (std::size_t k = 0; k < j; ++k) v -= chol[i * p + k] * chol[j * p + k];
                chol[i * p + j] = v / l;
            }
        }
        require(ok, "RankDeficient", "covariates are perfectly collinear");
    }

    detail::OlogitObjective obj{Z, ds.y, M};
    const std::size_t d = obj.dim();

    // Start at the null model: beta = 0, thresholds at the logit of the
    // empirical cumulative class frequencies.
    std::vector<double> theta(d, 0.0);
    {
        std::vector<double> counts(static_cast<std::size_t>(M), 0.0);
        for (int label : ds.y) counts[static_cast<std::size_t>(label - 1)] += 1.0;
        double cum = 0.0;
        std::vector<double> alpha0;
        for (int m = 0; m < M - 1; ++m) {
            cum += counts[static_cast<std::size_t>(m)];
            double share = cum / static_cast<double>(n);
            share = std::min(std::max(share, 1e-6), 1.0 - 1e-6);
            alpha0.push_back(logistic_quantile(share));
        }
        theta[p] = alpha0[0];
        for (std::size_t j = 1; j + 1 < static_cast<std::size_t>(M); ++j)
            theta[p + j] = std::log(std::max(alpha0[j] - alpha0[j - 1], 1e-8));
    }

    double ll = obj.loglik(theta);
    std::vector<double> grad, hess, step;
    OlogitModel model;
    model.n_classes = M;
    model.class_map = ds.class_map;
    model.train_meta = meta;
    model.n_iter = 0;
    model.converged = false;

    for (int iter = 0; iter <= opts.max_iter; ++iter) {
        obj.derivatives(theta, grad, hess);
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::fabs(g));
        if (gmax < opts.grad_tol) {
            model.converged = true;
            break;
        }
        if (iter == opts.max_iter) break;  // NotConverged: flag, not a failure

        // Newton direction on -H with a ridge fallback.
        std::vector<double> neg_h = hess;
        for (double& v : neg_h) v = -v;
        double scale = 1.0;
        for (std::size_t j = 0; j < d; ++j) scale = std::max(scale, std::fabs(neg_h[j * d + j]));
        double ridge = 0.0;
        bool solved = false;
        for (int attempt = 0; attempt < 12 && !solved; ++attempt) {
            std::vector<double> A = neg_h;
            for (std::size_t j = 0; j < d; ++j) A[j * d + j] += ridge;
            solved = detail::cholesky_solve(A, grad, d, step);
            if (solved) {
                double descent = 0.0;
                for (std::size_t j = 0; j < d; ++j) descent += step[j] * grad[j];
                if (!(descent > 0.0)) solved = false;
            }
            if (!solved) ridge = ridge == 0.0 ? 1e-8 * scale : ridge * 10.0;
        }
        if (!solved) break;

        double descent = 0.0;
        for (std::size_t j = 0; j < d; ++j) descent += step[j] * grad[j];
        // Once the predicted gain drops below what the objective can resolve
        // in double precision, the full Newton step is taken untested.
        const double fp_floor =
            64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(ll));
        double t = 1.0;
        std::vector<double> trial(d);
        double ll_new = ll;
        while (t > 1e-12) {
            for (std::size_t j = 0; j < d; ++j) trial[j] = theta[j] + t * step[j];
            ll_new = obj.loglik(trial);
            if (ll_new >= ll + 1e-4 * t * descent) break;
            if (t == 1.0 && 1e-4 * descent <= fp_floor && ll_new >= ll - fp_floor) break;
            t *= 0.5;
        }
        if (!(ll_new >= ll - fp_floor) && t <= 1e-12) break;
        theta = trial;
        ll = ll_new;
        ++model.n_iter;
    }

    // Back-transform to the original covariate scale:
    // alpha_z - z'beta_z = (alpha_z + sum beta_z_k mu_k / sd_k) - x'(beta_z / sd).
    const std::vector<double> alpha_z = obj.thresholds(theta);
    model.beta.assign(p, 0.0);
    double shift = 0.0;
    for (std::size_t c = 0; c < p; ++c) {
        model.beta[c] = theta[c] / meta.sd[c];
        shift += theta[c] * meta.mean[c] / meta.sd[c];
    }
    model.alpha.assign(alpha_z.begin(), alpha_z.end());
    for (double& a : model.alpha) a += shift;
    model.loglik = ll;
    return model;
}

// P(Y = m | x) = Lambda(alpha_m - x'beta) - Lambda(alpha_{m-1} - x'beta).
inline std::vector<double> predict_proba_ologit_row(const OlogitModel& model, const double* x) {
    const std::size_t p = model.beta.size();
    double eta = 0.0;
    for (std::size_t c = 0; c < p; ++c) eta += x[c] * model.beta[c];
    std::vector<double> probs(static_cast<std::size_t>(model.n_classes));
    double prev = 0.0;
    for (int m = 1; m <= model.n_classes; ++m) {
        const double cur =
            m < model.n_classes ? logistic_cdf(model.alpha[static_cast<std::size_t>(m) - 1] - eta) : 1.0;
        probs[static_cast<std::size_t>(m) - 1] = cur - prev;
        prev = cur;
    }
    return probs;
}

inline Matrix predict_proba_ologit(const OlogitModel& model, const Matrix& X) {
    require(X.cols() == model.beta.size(), "ColumnMismatch",
            "prediction matrix has " + std::to_string(X.cols()) + " columns, model has " +
                std::to_string(model.beta.size()));
    Matrix out(X.rows(), static_cast<std::size_t>(model.n_classes));
    for (std::size_t r = 0; r < X.rows(); ++r)
        out.set_row(r, predict_proba_ologit_row(model, X.row(r)));
    return out;
}

}  // namespace orf
