#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "orf/common.hpp"
#include "orf/rng.hpp"

namespace orf {

struct TreeNode {
    int split_var = -1;  // -1 marks a leaf
    double split_value = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;           // mean outcome of member_ids
    std::vector<int> member_ids;  // estimation observations in this leaf

    bool is_leaf() const { return split_var < 0; }
};

// A single regression tree. sample_ids are the observations used to place
// splits; estimation_ids populate the leaves (identical unless honest).
struct Tree {
    std::vector<TreeNode> nodes;
    std::vector<int> sample_ids;
    std::vector<int> estimation_ids;

    int leaf_for(const double* x) const {
        int id = 0;
        while (!nodes[id].is_leaf())
            id = (x[nodes[id].split_var] <= nodes[id].split_value) ? nodes[id].left : nodes[id].right;
        return id;
    }
};

namespace detail {

struct SplitCandidate {
    int var = -1;
    double threshold = 0.0;
    bool found = false;
};

// Exhaustive CART split search over midpoints of consecutive distinct values
// of each candidate covariate. Children must keep at least min_leaf structure
// observations and, in honest mode, min_leaf estimation observations. Among
// equal-gain splits the lowest covariate index, then the lowest threshold
// wins; candidates are scanned in that order and accepted only on a strict
// improvement.
inline SplitCandidate best_split(const Matrix& X, const std::vector<double>& y,
                                 const std::vector<int>& struct_ids,
                                 const std::vector<int>& est_ids, bool honest,
                                 const std::vector<int>& candidate_vars, int min_leaf) {
    SplitCandidate best;
    const std::size_t n = struct_ids.size();
    double total = 0.0;
    for (int id : struct_ids) total += y[static_cast<std::size_t>(id)];
    const double parent_score = total * total / static_cast<double>(n);
    double best_score = parent_score;

    std::vector<std::pair<double, double>> vals;  // (x, y) of structure obs
    std::vector<double> est_vals;
    vals.reserve(n);
    for (int var : candidate_vars) {
        vals.clear();
        for (int id : struct_ids)
            vals.emplace_back(X(static_cast<std::size_t>(id), static_cast<std::size_t>(var)),
                              y[static_cast<std::size_t>(id)]);
        std::sort(vals.begin(), vals.end());

        if (honest) {
            est_vals.clear();
            est_vals.reserve(est_ids.size());
            for (int id : est_ids)
                est_vals.push_back(X(static_cast<std::size_t>(id), static_cast<std::size_t>(var)));
            std::sort(est_vals.begin(), est_vals.end());
        }

        double sum_left = vals[0].second;
        std::size_t est_left = 0;
        for (std::size_t i = 1; i < n; ++i) {
            const double lo = vals[i - 1].first;
            const double hi = vals[i].first;
            if (lo < hi) {
                double t = 0.5 * (lo + hi);
                if (!(t < hi)) t = lo;  // keep the partition identical to the scan
                const std::size_t n_left = i;
                const std::size_t n_right = n - i;
                bool ok = n_left >= static_cast<std::size_t>(min_leaf) &&
                          n_right >= static_cast<std::size_t>(min_leaf);
                if (ok && honest) {
                    while (est_left < est_vals.size() && est_vals[est_left] <= t) ++est_left;
                    ok = est_left >= static_cast<std::size_t>(min_leaf) &&
                         est_vals.size() - est_left >= static_cast<std::size_t>(min_leaf);
                }
                if (ok) {
                    const double sum_right = total - sum_left;
                    const double score = sum_left * sum_left / static_cast<double>(n_left) +
                                         sum_right * sum_right / static_cast<double>(n_right);
                    if (score > best_score) {
                        best_score = score;
                        best.var = var;
                        best.threshold = t;
                        best.found = true;
                    }
                }
            }
            sum_left += vals[i].second;
        }
    }
    return best;
}

}  // namespace detail

struct TreeGrowSettings {
    int mtry = 1;
    int min_leaf = 5;
    bool honest = false;
};

// Grows one tree by recursive partitioning (depth first, left child first).
// The RNG draw protocol is part of the determinism contract: whenever a node
// passes the size checks, exactly one mtry draw is consumed before the split
// search runs.
inline Tree grow_tree(const Matrix& X, const std::vector<double>& y,
                      std::vector<int> struct_ids, std::vector<int> est_ids,
                      const TreeGrowSettings& cfg, Rng& rng) {
    Tree tree;
    tree.sample_ids = struct_ids;
    tree.estimation_ids = est_ids;
    const int p = static_cast<int>(X.cols());

    auto make_leaf = [&](std::vector<int>&& members) {
        TreeNode leaf;
        double sum = 0.0;
        for (int id : members) sum += y[static_cast<std::size_t>(id)];
        leaf.value = members.empty() ? 0.0 : sum / static_cast<double>(members.size());
        leaf.member_ids = std::move(members);
        tree.nodes.push_back(std::move(leaf));
        return static_cast<int>(tree.nodes.size()) - 1;
    };

    // Recursive growth; returns the node id.
    auto grow = [&](auto&& self, std::vector<int> s_ids, std::vector<int> e_ids) -> int {
        const bool splittable =
            s_ids.size() >= 2 * static_cast<std::size_t>(cfg.min_leaf) &&
            (!cfg.honest || e_ids.size() >= 2 * static_cast<std::size_t>(cfg.min_leaf));
        if (splittable) {
            std::vector<int> candidates = sample_without_replacement(p, std::min(cfg.mtry, p), rng);
            std::sort(candidates.begin(), candidates.end());
            const detail::SplitCandidate split =
                detail::best_split(X, y, s_ids, cfg.honest ? e_ids : s_ids, cfg.honest,
                                   candidates, cfg.min_leaf);
            if (split.found) {
                auto goes_left = [&](int id) {
                    return X(static_cast<std::size_t>(id), static_cast<std::size_t>(split.var)) <=
                           split.threshold;
                };
                std::vector<int> sl, sr, el, er;
                for (int id : s_ids) (goes_left(id) ? sl : sr).push_back(id);
                if (cfg.honest) {
                    for (int id : e_ids) (goes_left(id) ? el : er).push_back(id);
                } else {
                    el = sl;
                    er = sr;
                }
                s_ids.clear();
                e_ids.clear();
                const int node_id = static_cast<int>(tree.nodes.size());
                tree.nodes.emplace_back();
                tree.nodes[node_id].split_var = split.var;
                tree.nodes[node_id].split_value = split.threshold;
                const int left = self(self, std::move(sl), std::move(el));
                const int right = self(self, std::move(sr), std::move(er));
                tree.nodes[node_id].left = left;
                tree.nodes[node_id].right = right;
                return node_id;
            }
        }
        return make_leaf(cfg.honest ? std::move(e_ids) : std::move(s_ids));
    };

    if (cfg.honest)
        grow(grow, std::move(struct_ids), std::move(est_ids));
    else
        grow(grow, std::move(struct_ids), {});
    return tree;
}

}  // namespace orf
