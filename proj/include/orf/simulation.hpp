#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "orf/common.hpp"
#include "orf/dataset.hpp"
#include "orf/estimators.hpp"
#include "orf/metrics.hpp"
#include "orf/parallel.hpp"
#include "orf/rng.hpp"

namespace orf {

// Fixed so the 72 designs are fixed objects; chosen so every random-threshold
// draw keeps the smallest class share workable at the stated training sizes.
inline constexpr std::uint64_t kDefaultDgpSeed = 199872;

// One simulation design: a latent-index ordered-logit data generating process
// with switchable noise dimensions, sine nonlinearity, correlated regressors
// and random threshold spacing, for 3, 6 or 9 outcome classes.
struct DgpConfig {
    int id = 0;  // 1..72 when enumerated
    int n_classes = 3;
    bool high_dim = false;           // +1000 zero-effect normals (noise forced on)
    bool noise = false;              // +10 normals and +5 Bernoulli(0.5) dummies, zero effect
    bool nonlinear = false;          // index uses sin(2x) transforms
    bool multicollinear = false;     // rho = 0.8 among the odd effect covariates
    bool random_thresholds = false;  // threshold quantiles ~ sorted U(0,1)
    std::uint64_t seed = kDefaultDgpSeed;
    int calibration_n = 1000000;
    std::vector<double> thresholds;  // filled by calibrate_thresholds

    static constexpr int n_effect = 15;

    int n_columns() const {
        int p = n_effect;
        if (noise || high_dim) p += 15;
        if (high_dim) p += 1000;
        return p;
    }

    std::string label() const {
        std::string s = high_dim ? "high/" : "low/";
        s += std::to_string(n_classes);
        std::string flags;
        if (noise) flags += flags.empty() ? "noise" : "+noise";
        if (nonlinear) flags += flags.empty() ? "nonlinear" : "+nonlinear";
        if (multicollinear) flags += flags.empty() ? "multicollinear" : "+multicollinear";
        if (random_thresholds) flags += flags.empty() ? "random_thresholds" : "+random_thresholds";
        s += "/" + (flags.empty() ? std::string("simple") : flags);
        return s;
    }

    // Threshold quantile levels, fixed per config: m/M when equally spaced,
    // sorted uniform draws (from the config seed) otherwise.
    std::vector<double> quantile_levels() const {
        std::vector<double> q(static_cast<std::size_t>(n_classes - 1));
        if (!random_thresholds) {
            for (int m = 1; m < n_classes; ++m)
                q[static_cast<std::size_t>(m - 1)] = static_cast<double>(m) / n_classes;
            return q;
        }
        Rng rng = make_rng(derive_seed(seed, 0x71e5ULL));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (double& v : q) v = u(rng);
        std::sort(q.begin(), q.end());
        return q;
    }
};

struct SimSample {
    Dataset train;
    Dataset test;
    Matrix true_probs_test;
    int redraws = 0;  // train draws discarded for missing classes
};

inline const std::vector<double>& dgp_betas() {
    static const std::vector<double> betas = {1.0, 1.0, 1.0, 1.0, 1.0, 0.75, 0.75, 0.75,
                                              0.75, 0.75, 0.5, 0.5, 0.5, 0.5, 0.5};
    return betas;
}

// Latent index g(x): linear in the 15 effect covariates, or the sine
// transform sum beta_j * sin(2 x_j); the intercept is fixed at zero.
inline double dgp_index(const double* x, const DgpConfig& config) {
    const auto& betas = dgp_betas();
    double g = 0.0;
    if (config.nonlinear) {
        for (int j = 0; j < DgpConfig::n_effect; ++j) g += betas[static_cast<std::size_t>(j)] * std::sin(2.0 * x[j]);
    } else {
        for (int j = 0; j < DgpConfig::n_effect; ++j) g += betas[static_cast<std::size_t>(j)] * x[j];
    }
    return g;
}

inline double dgp_index(const std::vector<double>& x, const DgpConfig& config) {
    return dgp_index(x.data(), config);
}

namespace detail {

// Effect covariates ~ N(0, Sigma). Under multicollinearity the odd effect
// covariates (1-based 1,3,...,15) share a common factor: sqrt(0.8) z0 +
// sqrt(0.2) z_j has unit variance and pairwise correlation 0.8, a one-factor
// factorization of the stated Sigma.
inline void draw_effect_row(double* out, const DgpConfig& config, Rng& rng,
                            std::normal_distribution<double>& normal) {
    if (config.multicollinear) {
        const double z0 = normal(rng);
        const double a = std::sqrt(0.8), b = std::sqrt(0.2);
        for (int j = 0; j < DgpConfig::n_effect; ++j) {
            const bool odd_1based = (j % 2) == 0;
            out[j] = odd_1based ? a * z0 + b * normal(rng) : normal(rng);
        }
    } else {
        for (int j = 0; j < DgpConfig::n_effect; ++j) out[j] = normal(rng);
    }
}

}  // namespace detail

// Full covariate draw: 15 effect columns, then (optionally) 10 zero-effect
// normals and 5 zero-effect Bernoulli(0.5) dummies, then (high_dim) 1000
// zero-effect normals.
inline Matrix draw_covariates(std::size_t n, const DgpConfig& config, Rng& rng) {
    const int p = config.n_columns();
    Matrix X(n, static_cast<std::size_t>(p));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const bool with_noise = config.noise || config.high_dim;
    for (std::size_t i = 0; i < n; ++i) {
        double* row = X.row(i);
        detail::draw_effect_row(row, config, rng, normal);
        int c = DgpConfig::n_effect;
        if (with_noise) {
            for (int j = 0; j < 10; ++j) row[c++] = normal(rng);
            for (int j = 0; j < 5; ++j) row[c++] = unif(rng) < 0.5 ? 1.0 : 0.0;
        }
        if (config.high_dim)
            for (int j = 0; j < 1000; ++j) row[c++] = normal(rng);
    }
    return X;
}

// Empirical quantile, linear interpolation between order statistics.
inline double empirical_quantile(std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    const double h = q * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - std::floor(h);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Thresholds = empirical quantiles of a large latent sample Y* = g(X) + u,
// u ~ standard logistic, at the config's quantile levels. Only the effect
// covariates matter for the index, so the draw streams them.
inline std::vector<double> calibrate_thresholds(const DgpConfig& config, Rng& rng) {
    std::vector<double> latent(static_cast<std::size_t>(config.calibration_n));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double row[DgpConfig::n_effect];
    for (auto& v : latent) {
        detail::draw_effect_row(row, config, rng, normal);
        const double u = unif(rng);
        v = dgp_index(row, config) + std::log(u / (1.0 - u));
    }
    std::sort(latent.begin(), latent.end());
    std::vector<double> thresholds;
    for (double q : config.quantile_levels()) thresholds.push_back(empirical_quantile(latent, q));
    for (std::size_t j = 1; j < thresholds.size(); ++j)
        require(thresholds[j] > thresholds[j - 1], "DegenerateThresholds",
                "calibrated thresholds are not strictly increasing");
    return thresholds;
}

inline void ensure_calibrated(DgpConfig& config) {
    if (!config.thresholds.empty()) return;
    Rng rng = make_rng(derive_seed(config.seed, 0xca11ULL));
    config.thresholds = calibrate_thresholds(config, rng);
}

inline int label_from_latent(double latent, const std::vector<double>& thresholds) {
    const auto it = std::lower_bound(thresholds.begin(), thresholds.end(), latent);
    return static_cast<int>(it - thresholds.begin()) + 1;
}

// Training + testing draw with analytic true probabilities on the test set.
// Training draws missing a class are redrawn up to 10 times.
inline SimSample draw_sample(const DgpConfig& config, std::size_t n_train, std::size_t n_test,
                             Rng& rng) {
    require(!config.thresholds.empty(), "NotCalibrated",
            "calibrate_thresholds must run before draw_sample");
    const int M = config.n_classes;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto draw_labels = [&](const Matrix& X) {
        std::vector<int> y(X.rows());
        for (std::size_t i = 0; i < X.rows(); ++i) {
            const double u = unif(rng);
            const double latent = dgp_index(X.row(i), config) + std::log(u / (1.0 - u));
            y[i] = label_from_latent(latent, config.thresholds);
        }
        return y;
    };

    std::vector<bool> cat_mask(static_cast<std::size_t>(config.n_columns()), false);
    if (config.noise || config.high_dim)
        for (int j = 0; j < 5; ++j)
            cat_mask[static_cast<std::size_t>(DgpConfig::n_effect + 10 + j)] = true;

    SimSample sample;
    bool ok = false;
    for (int attempt = 0; attempt <= 10; ++attempt) {
        Matrix X = draw_covariates(n_train, config, rng);
        std::vector<int> y = draw_labels(X);
        std::vector<int> counts(static_cast<std::size_t>(M), 0);
        for (int label : y) ++counts[static_cast<std::size_t>(label - 1)];
        if (std::all_of(counts.begin(), counts.end(), [](int c) { return c > 0; })) {
            sample.train = make_dataset(std::move(X), std::move(y), M, cat_mask);
            sample.redraws = attempt;
            ok = true;
            break;
        }
    }
    require(ok, "DegenerateDraw",
            "training draw missing a class after 10 retries (config " + config.label() + ")");

    Matrix X_test = draw_covariates(n_test, config, rng);
    std::vector<int> y_test = draw_labels(X_test);
    sample.true_probs_test = Matrix(n_test, static_cast<std::size_t>(M));
    for (std::size_t i = 0; i < n_test; ++i) {
        const double g = dgp_index(X_test.row(i), config);
        double prev = 0.0;
        for (int m = 1; m <= M; ++m) {
            const double cur =
                m < M ? logistic_cdf(config.thresholds[static_cast<std::size_t>(m) - 1] - g) : 1.0;
            sample.true_probs_test(i, static_cast<std::size_t>(m) - 1) = cur - prev;
            prev = cur;
        }
    }
    sample.test = make_dataset(std::move(X_test), std::move(y_test), M, cat_mask);
    return sample;
}

// All 72 designs: 3 class counts x (16 low-dimensional flag combinations +
// 8 high-dimensional ones, noise always on in high dimension).
inline std::vector<DgpConfig> enumerate_dgps(std::uint64_t base_seed = kDefaultDgpSeed) {
    std::vector<DgpConfig> out;
    int id = 1;
    for (int high = 0; high <= 1; ++high) {
        for (int m : {3, 6, 9}) {
            const int n_flags = high ? 8 : 16;
            for (int bits = 0; bits < n_flags; ++bits) {
                DgpConfig c;
                c.id = id;
                c.n_classes = m;
                c.high_dim = high == 1;
                if (c.high_dim) {
                    c.noise = true;
                    c.nonlinear = (bits & 1) != 0;
                    c.multicollinear = (bits & 2) != 0;
                    c.random_thresholds = (bits & 4) != 0;
                } else {
                    c.noise = (bits & 1) != 0;
                    c.nonlinear = (bits & 2) != 0;
                    c.multicollinear = (bits & 4) != 0;
                    c.random_thresholds = (bits & 8) != 0;
                }
                c.seed = derive_seed(base_seed, static_cast<std::uint64_t>(id));
                out.push_back(c);
                ++id;
            }
        }
    }
    return out;
}

// Finds the enumerated config matching a named shorthand ("simple3",
// "complex9") or a numeric id.
inline DgpConfig find_dgp(const std::string& name, std::uint64_t base_seed = kDefaultDgpSeed) {
    const std::vector<DgpConfig> all = enumerate_dgps(base_seed);
    auto match = [&](bool want_complex, int m) {
        for (const DgpConfig& c : all) {
            const bool simple =
                !c.high_dim && !c.noise && !c.nonlinear && !c.multicollinear && !c.random_thresholds;
            const bool complex_ =
                !c.high_dim && c.noise && c.nonlinear && c.multicollinear && c.random_thresholds;
            if (c.n_classes == m && ((want_complex && complex_) || (!want_complex && simple))) return c;
        }
        throw Error("BadParams", "no such design");
    };
    for (int m : {3, 6, 9}) {
        if (name == "simple" + std::to_string(m)) return match(false, m);
        if (name == "complex" + std::to_string(m)) return match(true, m);
    }
    try {
        const int id = std::stoi(name);
        for (const DgpConfig& c : all)
            if (c.id == id) return c;
    } catch (const std::exception&) {
    }
    throw Error("BadParams", "unknown design '" + name + "' (use an id 1..72, simpleM or complexM)");
}

struct ExperimentRow {
    int config_id = 0;
    std::string config_label;
    EstimatorKind estimator = EstimatorKind::ordered;
    double mean_rps = 0.0, sd_rps = 0.0;
    double mean_mse = 0.0, sd_mse = 0.0;
    int n_reps = 0;
    int n_not_converged = 0;
    bool skipped = false;  // ologit in high dimension
};

// Monte Carlo experiment: per (config, estimator) the mean and standard
// deviation of RPS and MSE across R replications, each trained on a fresh
// draw of n_train rows and scored on a fresh n_test draw against the true
// probabilities. All estimators share the data within a replication.
inline std::vector<ExperimentRow> run_experiment(std::vector<DgpConfig> configs,
                                                 const std::vector<EstimatorKind>& estimators,
                                                 int replications, std::size_t n_train,
                                                 std::size_t n_test, std::uint64_t seed,
                                                 ForestParams forest_params = {},
                                                 int n_threads = 0) {
    require(replications >= 1, "BadParams", "need at least one replication");
    std::vector<ExperimentRow> rows;
    for (DgpConfig& config : configs) {
        ensure_calibrated(config);
        std::vector<EstimatorKind> active;
        for (EstimatorKind est : estimators) {
            if (config.high_dim && est == EstimatorKind::ologit) {
                ExperimentRow row;
                row.config_id = config.id;
                row.config_label = config.label();
                row.estimator = est;
                row.skipped = true;
                rows.push_back(row);
                continue;
            }
            active.push_back(est);
        }
        if (active.empty()) continue;

        std::vector<std::vector<double>> rps(active.size(),
                                             std::vector<double>(static_cast<std::size_t>(replications)));
        std::vector<std::vector<double>> mse = rps;
        std::vector<int> not_converged(active.size(), 0);
        std::vector<int> nc_slots(static_cast<std::size_t>(replications) * active.size(), 0);

        // Replication streams hang off both the run seed and the config seed:
        // the config stays a fixed object, the draws follow the run.
        const std::uint64_t run_seed = derive_seed(seed, config.seed);
        parallel_for(static_cast<std::size_t>(replications), n_threads, [&](std::size_t rep) {
            Rng data_rng = make_rng(derive_seed(run_seed, 0xdadaULL, rep));
            const SimSample sample = draw_sample(config, n_train, n_test, data_rng);
            for (std::size_t e = 0; e < active.size(); ++e) {
                ForestParams fp = forest_params;
                fp.n_threads = 1;  // replication-level parallelism only
                const FitPredictResult fit = fit_predict(
                    active[e], sample.train, sample.test.X, fp,
                    derive_seed(run_seed, 0xf17ULL + e, rep));
                const ScoreReport score = score_against_probs(sample.true_probs_test, fit.probs);
                rps[e][rep] = score.arps;
                mse[e][rep] = score.amse;
                if (!fit.converged) nc_slots[rep * active.size() + e] = 1;
            }
        });
        for (std::size_t e = 0; e < active.size(); ++e)
            for (int rep = 0; rep < replications; ++rep)
                not_converged[e] += nc_slots[static_cast<std::size_t>(rep) * active.size() + e];

        for (std::size_t e = 0; e < active.size(); ++e) {
            ExperimentRow row;
            row.config_id = config.id;
            row.config_label = config.label();
            row.estimator = active[e];
            row.mean_rps = mean_of(rps[e]);
            row.sd_rps = sd_of(rps[e]);
            row.mean_mse = mean_of(mse[e]);
            row.sd_mse = sd_of(mse[e]);
            row.n_reps = replications;
            row.n_not_converged = not_converged[e];
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace orf
