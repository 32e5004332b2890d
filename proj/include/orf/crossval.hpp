#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orf/common.hpp"
#include "orf/dataset.hpp"
#include "orf/estimators.hpp"
#include "orf/metrics.hpp"
#include "orf/parallel.hpp"

namespace orf {

struct CrossValResult {
    EstimatorKind estimator = EstimatorKind::ordered;
    std::vector<double> fold_rps;  // one entry per repeat x fold
    std::vector<double> fold_mse;
    double mean_rps = 0.0, sd_rps = 0.0;
    double mean_mse = 0.0, sd_mse = 0.0;
    int n_not_converged = 0;
};

// Repeated k-fold cross-validation scored with realized-class RPS/MSE.
// Every training set must contain all classes; plans are redrawn up to 10
// times before giving up.
inline std::vector<CrossValResult> cross_validate(const Dataset& ds,
                                                  const std::vector<EstimatorKind>& estimators,
                                                  int k = 10, int repeats = 10,
                                                  std::uint64_t seed = 1,
                                                  ForestParams forest_params = {},
                                                  int n_threads = 0) {
    ds.validate();
    const std::size_t n = ds.n_rows();

    std::vector<SplitPlan> plans;
    std::uint64_t plan_seed = seed;
    for (int attempt = 0; attempt <= 10; ++attempt) {
        plans = split_folds(n, k, repeats, plan_seed);
        bool ok = true;
        for (const SplitPlan& plan : plans) {
            for (int f = 0; f < k && ok; ++f) {
                std::vector<int> counts(static_cast<std::size_t>(ds.n_classes), 0);
                for (std::size_t i = 0; i < n; ++i)
                    if (plan.fold_assignments[i] != f) ++counts[static_cast<std::size_t>(ds.y[i] - 1)];
                for (int c : counts)
                    if (c == 0) ok = false;
            }
            if (!ok) break;
        }
        if (ok) break;
        require(attempt < 10, "ClassAbsentFromFold",
                "could not build folds with every class in every training set");
        plan_seed = derive_seed(plan_seed, 0xabcdULL);
    }

    const std::size_t cells = static_cast<std::size_t>(repeats) * static_cast<std::size_t>(k);
    std::vector<CrossValResult> results(estimators.size());
    for (std::size_t e = 0; e < estimators.size(); ++e) {
        results[e].estimator = estimators[e];
        results[e].fold_rps.assign(cells, 0.0);
        results[e].fold_mse.assign(cells, 0.0);
    }
    std::vector<int> nc(cells * estimators.size(), 0);

    parallel_for(cells, n_threads, [&](std::size_t cell) {
        const int rep = static_cast<int>(cell) / k;
        const int fold = static_cast<int>(cell) % k;
        const SplitPlan& plan = plans[static_cast<std::size_t>(rep)];
        std::vector<int> train_rows, test_rows;
        for (std::size_t i = 0; i < n; ++i)
            (plan.fold_assignments[i] == fold ? test_rows : train_rows).push_back(static_cast<int>(i));
        const Dataset train = subset_rows(ds, train_rows);
        const Dataset test = subset_rows(ds, test_rows);
        for (std::size_t e = 0; e < estimators.size(); ++e) {
            ForestParams fp = forest_params;
            fp.n_threads = 1;
            const FitPredictResult fit =
                fit_predict(estimators[e], train, test.X, fp,
                            derive_seed(seed, cell, 0xcafeULL + e));
            const ScoreReport score = score_against_classes(test.y, fit.probs);
            results[e].fold_rps[cell] = score.arps;
            results[e].fold_mse[cell] = score.amse;
            if (!fit.converged) nc[cell * estimators.size() + e] = 1;
        }
    });

    for (std::size_t e = 0; e < estimators.size(); ++e) {
        CrossValResult& r = results[e];
        r.mean_rps = mean_of(r.fold_rps);
        r.sd_rps = sd_of(r.fold_rps);
        r.mean_mse = mean_of(r.fold_mse);
        r.sd_mse = sd_of(r.fold_mse);
        for (std::size_t cell = 0; cell < cells; ++cell) r.n_not_converged += nc[cell * estimators.size() + e];
    }
    return results;
}

}  // namespace orf
