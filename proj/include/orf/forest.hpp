#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "orf/common.hpp"
#include "orf/parallel.hpp"
#include "orf/rng.hpp"
#include "orf/tree.hpp"

namespace orf {

struct ForestParams {
    int n_trees = 1000;
    int mtry = 0;                     // 0 -> ceil(sqrt(p))
    int min_leaf = 5;
    bool honest = false;              // double-sample trees, subsampling without replacement
    double subsample_fraction = 0.0;  // 0 -> 0.5 when honest, 1.0 otherwise
    bool sample_with_replacement = true;  // bootstrap mode only; honest always draws without
    std::uint64_t seed = 1;
    int n_threads = 0;  // 0 -> hardware concurrency; never affects results

    int resolved_mtry(std::size_t p) const {
        if (mtry > 0) return std::min<int>(mtry, static_cast<int>(p));
        return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
    }
    double resolved_fraction() const {
        if (subsample_fraction > 0.0) return subsample_fraction;
        return honest ? 0.5 : 1.0;
    }
};

struct Forest {
    std::vector<Tree> trees;
    ForestParams params;
    std::size_t n_train = 0;
};

// Leaf membership of an external target sample, one entry per (tree, node).
// Used when forest weights must range over observations other than the ones
// the trees were grown on (the honest-inference half split).
struct LeafIndex {
    std::size_t n_target = 0;
    std::vector<std::vector<std::vector<int>>> members;  // [tree][node] -> target rows
};

inline Forest fit_forest(const Matrix& X, const std::vector<double>& y, ForestParams params) {
    const std::size_t n = X.rows();
    require(n > 0 && X.cols() > 0, "EmptyData", "cannot fit a forest on empty data");
    require(n == y.size(), "LengthMismatch", "rows(X) != len(y)");
    require(params.n_trees >= 1, "BadParams", "n_trees must be >= 1");
    require(params.min_leaf >= 1, "BadParams", "min_leaf must be >= 1");

    Forest forest;
    forest.params = params;
    forest.n_train = n;
    forest.trees.resize(static_cast<std::size_t>(params.n_trees));

    TreeGrowSettings cfg;
    cfg.mtry = params.resolved_mtry(X.cols());
    cfg.min_leaf = params.min_leaf;
    cfg.honest = params.honest;
    const double fraction = params.resolved_fraction();

    parallel_for(static_cast<std::size_t>(params.n_trees), params.n_threads, [&](std::size_t b) {
        Rng rng = make_rng(derive_seed(params.seed, b));
        std::vector<int> struct_ids, est_ids;
        if (params.honest) {
            const int s = std::max(2, static_cast<int>(std::floor(fraction * static_cast<double>(n))));
            std::vector<int> drawn = sample_without_replacement(static_cast<int>(n), std::min<int>(s, static_cast<int>(n)), rng);
            const std::size_t n_struct = (drawn.size() + 1) / 2;
            struct_ids.assign(drawn.begin(), drawn.begin() + static_cast<std::ptrdiff_t>(n_struct));
            est_ids.assign(drawn.begin() + static_cast<std::ptrdiff_t>(n_struct), drawn.end());
        } else if (params.sample_with_replacement) {
            const int s = std::max(1, static_cast<int>(std::floor(fraction * static_cast<double>(n))));
            std::uniform_int_distribution<int> d(0, static_cast<int>(n) - 1);
            struct_ids.reserve(static_cast<std::size_t>(s));
            for (int i = 0; i < s; ++i) struct_ids.push_back(d(rng));
            est_ids = struct_ids;
        } else {
            const int s = std::max(1, static_cast<int>(std::floor(fraction * static_cast<double>(n))));
            struct_ids = sample_without_replacement(static_cast<int>(n), std::min<int>(s, static_cast<int>(n)), rng);
            est_ids = struct_ids;
        }
        forest.trees[b] = grow_tree(X, y, std::move(struct_ids), std::move(est_ids), cfg, rng);
    });
    return forest;
}

// Average over trees of the leaf mean containing x; trees whose leaf holds no
// estimation observation are skipped and the average renormalized.
inline double predict(const Forest& forest, const double* x) {
    double sum = 0.0;
    std::size_t used = 0;
    for (const Tree& tree : forest.trees) {
        const TreeNode& leaf = tree.nodes[static_cast<std::size_t>(tree.leaf_for(x))];
        if (leaf.member_ids.empty()) continue;
        sum += leaf.value;
        ++used;
    }
    require(used > 0, "AllLeavesEmpty", "no tree has estimation data at the query point");
    return sum / static_cast<double>(used);
}

// Batch prediction: row chunks in parallel, trees in the inner loop so one
// tree's node array stays cache-hot across the chunk. Per-row accumulation
// runs in tree order, so results do not depend on the chunking.
inline std::vector<double> predict_rows(const Forest& forest, const Matrix& X, int n_threads = 0) {
    const std::size_t n = X.rows();
    std::vector<double> out(n, 0.0);
    constexpr std::size_t chunk = 512;
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    parallel_for(n_chunks, n_threads, [&](std::size_t c) {
        const std::size_t lo = c * chunk;
        const std::size_t hi = std::min(lo + chunk, n);
        std::vector<double> sum(hi - lo, 0.0);
        std::vector<int> used(hi - lo, 0);
        for (const Tree& tree : forest.trees) {
            for (std::size_t r = lo; r < hi; ++r) {
                const TreeNode& leaf = tree.nodes[static_cast<std::size_t>(tree.leaf_for(X.row(r)))];
                if (leaf.member_ids.empty()) continue;
                sum[r - lo] += leaf.value;
                ++used[r - lo];
            }
        }
        for (std::size_t r = lo; r < hi; ++r) {
            require(used[r - lo] > 0, "AllLeavesEmpty",
                    "no tree has estimation data at the query point");
            out[r] = sum[r - lo] / static_cast<double>(used[r - lo]);
        }
    });
    return out;
}

// Forest weights over the training (estimation) observations:
// w_i(x) = (1/B') sum_b 1{i in L_b(x)} / |L_b(x)| over trees with a
// nonempty leaf at x. Nonnegative, sums to one.
inline std::vector<double> extract_weights(const Forest& forest, const double* x) {
    std::vector<const TreeNode*> leaves;
    leaves.reserve(forest.trees.size());
    std::size_t used = 0;
    for (const Tree& tree : forest.trees) {
        const TreeNode& leaf = tree.nodes[static_cast<std::size_t>(tree.leaf_for(x))];
        leaves.push_back(&leaf);
        if (!leaf.member_ids.empty()) ++used;
    }
    require(used > 0, "AllLeavesEmpty", "no tree has estimation data at the query point");
    std::vector<double> w(forest.n_train, 0.0);
    const double tree_share = 1.0 / static_cast<double>(used);
    for (const TreeNode* leaf : leaves) {
        if (leaf->member_ids.empty()) continue;
        const double unit = tree_share / static_cast<double>(leaf->member_ids.size());
        for (int id : leaf->member_ids) w[static_cast<std::size_t>(id)] += unit;
    }
    return w;
}

// Drops every row of X_target down every tree once; the resulting index makes
// weight extraction over an external sample an O(B * leaf) lookup.
inline LeafIndex build_leaf_index(const Forest& forest, const Matrix& X_target, int n_threads = 0) {
    LeafIndex index;
    index.n_target = X_target.rows();
    index.members.resize(forest.trees.size());
    parallel_for(forest.trees.size(), n_threads, [&](std::size_t b) {
        const Tree& tree = forest.trees[b];
        index.members[b].resize(tree.nodes.size());
        for (std::size_t r = 0; r < X_target.rows(); ++r)
            index.members[b][static_cast<std::size_t>(tree.leaf_for(X_target.row(r)))].push_back(
                static_cast<int>(r));
    });
    return index;
}

// Weights over the indexed target sample.
inline std::vector<double> extract_weights(const Forest& forest, const double* x,
                                           const LeafIndex& index) {
    std::vector<int> leaf_ids(forest.trees.size());
    std::size_t used = 0;
    for (std::size_t b = 0; b < forest.trees.size(); ++b) {
        leaf_ids[b] = forest.trees[b].leaf_for(x);
        if (!index.members[b][static_cast<std::size_t>(leaf_ids[b])].empty()) ++used;
    }
    require(used > 0, "AllLeavesEmpty", "no tree has target data at the query point");
    std::vector<double> w(index.n_target, 0.0);
    const double tree_share = 1.0 / static_cast<double>(used);
    for (std::size_t b = 0; b < forest.trees.size(); ++b) {
        const auto& members = index.members[b][static_cast<std::size_t>(leaf_ids[b])];
        if (members.empty()) continue;
        const double unit = tree_share / static_cast<double>(members.size());
        for (int id : members) w[static_cast<std::size_t>(id)] += unit;
    }
    return w;
}

// Prediction with leaves repopulated by an external sample: average over
// nonempty trees of the mean target outcome in the leaf containing x.
inline double predict(const Forest& forest, const double* x, const LeafIndex& index,
                      const std::vector<double>& y_target) {
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < forest.trees.size(); ++b) {
        const auto& members =
            index.members[b][static_cast<std::size_t>(forest.trees[b].leaf_for(x))];
        if (members.empty()) continue;
        double leaf_sum = 0.0;
        for (int id : members) leaf_sum += y_target[static_cast<std::size_t>(id)];
        sum += leaf_sum / static_cast<double>(members.size());
        ++used;
    }
    require(used > 0, "AllLeavesEmpty", "no tree has target data at the query point");
    return sum / static_cast<double>(used);
}

// Out-of-bag predictions for the training matrix: row i is averaged only over
// trees that did not see observation i. Rows that are in-bag everywhere fall
// back to the full-forest prediction.
inline std::vector<double> predict_oob(const Forest& forest, const Matrix& X, int n_threads = 0) {
    const std::size_t n = X.rows();
    std::vector<std::vector<char>> in_bag(forest.trees.size(), std::vector<char>(n, 0));
    for (std::size_t b = 0; b < forest.trees.size(); ++b) {
        for (int id : forest.trees[b].sample_ids) in_bag[b][static_cast<std::size_t>(id)] = 1;
        for (int id : forest.trees[b].estimation_ids) in_bag[b][static_cast<std::size_t>(id)] = 1;
    }
    std::vector<double> out(n, 0.0);
    parallel_for(n, n_threads, [&](std::size_t r) {
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t b = 0; b < forest.trees.size(); ++b) {
            if (in_bag[b][r]) continue;
            const TreeNode& leaf =
                forest.trees[b].nodes[static_cast<std::size_t>(forest.trees[b].leaf_for(X.row(r)))];
            if (leaf.member_ids.empty()) continue;
            sum += leaf.value;
            ++used;
        }
        out[r] = used > 0 ? sum / static_cast<double>(used) : predict(forest, X.row(r));
    });
    return out;
}

}  // namespace orf
