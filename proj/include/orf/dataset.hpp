#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "orf/common.hpp"
#include "orf/rng.hpp"

namespace orf {

// Tabular data with an ordered categorical outcome. Labels are stored
// re-encoded to contiguous 1..M; the original values live in class_map.
struct Dataset {
    Matrix X;                           // N x p covariates
    std::vector<int> y;                 // N labels in 1..M
    std::vector<std::string> col_names; // p names
    std::vector<bool> categorical_mask; // p flags
    int n_classes = 0;                  // M
    std::vector<long long> class_map;   // class_map[m-1] = original label of class m

    std::size_t n_rows() const { return X.rows(); }
    std::size_t n_cols() const { return X.cols(); }

    long long decode_label(int m) const { return class_map[static_cast<std::size_t>(m) - 1]; }

    void validate() const {
        require(n_classes >= 2, "SingleClassOutcome", "outcome needs at least 2 distinct classes");
        require(X.rows() == y.size(), "LengthMismatch", "covariate rows and label count differ");
        require(y.size() >= static_cast<std::size_t>(n_classes), "TooFewRows",
                "need at least one observation per class (N >= M)");
        for (int label : y)
            require(label >= 1 && label <= n_classes, "BadLabel", "label out of range 1..M");
    }
};

// Assembles a Dataset from in-memory parts; labels must already be 1..M.
inline Dataset make_dataset(Matrix X, std::vector<int> y, int n_classes,
                            std::vector<bool> categorical_mask = {},
                            std::vector<std::string> col_names = {}) {
    Dataset ds;
    ds.X = std::move(X);
    ds.y = std::move(y);
    ds.n_classes = n_classes;
    ds.class_map.resize(static_cast<std::size_t>(n_classes));
    for (int m = 0; m < n_classes; ++m) ds.class_map[static_cast<std::size_t>(m)] = m + 1;
    if (col_names.empty()) {
        for (std::size_t c = 0; c < ds.X.cols(); ++c)
            ds.col_names.push_back("x" + std::to_string(c + 1));
    } else {
        ds.col_names = std::move(col_names);
    }
    ds.categorical_mask =
        categorical_mask.empty() ? std::vector<bool>(ds.X.cols(), false) : std::move(categorical_mask);
    ds.validate();
    return ds;
}

// Row subset preserving class metadata (the subset may be missing classes;
// callers that need all classes present must check).
inline Dataset subset_rows(const Dataset& ds, const std::vector<int>& rows) {
    Dataset out;
    out.X = Matrix(rows.size(), ds.X.cols());
    out.y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.set_row(i, ds.X.row_copy(static_cast<std::size_t>(rows[i])));
        out.y.push_back(ds.y[static_cast<std::size_t>(rows[i])]);
    }
    out.col_names = ds.col_names;
    out.categorical_mask = ds.categorical_mask;
    out.n_classes = ds.n_classes;
    out.class_map = ds.class_map;
    return out;
}

// Per-column training statistics carried by fitted models; marginal-effect
// evaluation windows are built from these.
struct TrainMeta {
    std::vector<std::string> col_names;
    std::vector<bool> categorical_mask;
    std::vector<double> mean, sd, min, max;

    std::size_t n_cols() const { return col_names.size(); }
};

inline TrainMeta compute_train_meta(const Dataset& ds) {
    TrainMeta meta;
    const std::size_t n = ds.X.rows(), p = ds.X.cols();
    meta.col_names = ds.col_names;
    meta.categorical_mask = ds.categorical_mask;
    meta.mean.assign(p, 0.0);
    meta.sd.assign(p, 0.0);
    meta.min.assign(p, 0.0);
    meta.max.assign(p, 0.0);
    for (std::size_t c = 0; c < p; ++c) {
        double s = 0.0, lo = ds.X(0, c), hi = ds.X(0, c);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = ds.X(i, c);
            s += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double m = s / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (ds.X(i, c) - m) * (ds.X(i, c) - m);
        meta.mean[c] = m;
        meta.sd[c] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        meta.min[c] = lo;
        meta.max[c] = hi;
    }
    return meta;
}

// Deterministic resampling plan: cross-validation folds and the half split
// used for honest inference.
struct SplitPlan {
    std::uint64_t seed = 0;
    std::vector<int> fold_assignments;  // length N, values 0..k-1
    std::vector<bool> half_assignments; // length N, true = first half
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n\"");
    std::size_t b = s.find_last_not_of(" \t\r\n\"");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_cell(const std::string& raw, std::size_t row, const std::string& col) {
    const std::string s = trim(raw);
    require(!s.empty(), "MissingValue",
            "empty cell in column '" + col + "' at data row " + std::to_string(row + 1));
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    require(res.ec == std::errc() && res.ptr == last, "NonNumericCell",
            "cannot parse '" + s + "' in column '" + col + "' at data row " + std::to_string(row + 1));
    require(std::isfinite(v), "MissingValue",
            "non-finite value in column '" + col + "' at data row " + std::to_string(row + 1));
    return v;
}

inline bool is_integral_value(double v) {
    return std::floor(v) == v && std::fabs(v) < 9.0e15;
}

}  // namespace detail

// Re-encodes arbitrary integer labels to contiguous 1..M preserving order.
// Returns the encoded labels; fills class_map with the sorted originals.
inline std::vector<int> encode_labels(const std::vector<long long>& raw,
                                      std::vector<long long>& class_map) {
    std::set<long long> distinct(raw.begin(), raw.end());
    class_map.assign(distinct.begin(), distinct.end());
    std::map<long long, int> to_class;
    int m = 1;
    for (long long v : class_map) to_class[v] = m++;
    std::vector<int> out;
    out.reserve(raw.size());
    for (long long v : raw) out.push_back(to_class[v]);
    return out;
}

struct CsvOptions {
    std::vector<std::string> categorical_columns; // forced categorical
    std::vector<std::string> continuous_columns;  // forced continuous (overrides auto-detection)
    bool auto_detect_categorical = true;          // integer columns with <= 10 distinct levels
    int auto_detect_max_levels = 10;
};

inline Dataset load_csv(const std::string& path, const std::string& y_column,
                        const CsvOptions& opts = {}) {
    std::ifstream in(path);
    require(in.good(), "FileNotFound", "cannot open '" + path + "'");

    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "EmptyFile", "'" + path + "' has no header row");
    std::vector<std::string> header = detail::split_csv_line(line);
    for (auto& h : header) h = detail::trim(h);

    int y_idx = -1;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == y_column) y_idx = static_cast<int>(c);
    require(y_idx >= 0, "MissingColumn", "outcome column '" + y_column + "' not in header");

    std::vector<std::vector<double>> rows;
    std::vector<long long> raw_labels;
    std::size_t r = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> cells = detail::split_csv_line(line);
        require(cells.size() == header.size(), "NonNumericCell",
                "row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                    " cells, header has " + std::to_string(header.size()));
        std::vector<double> row;
        row.reserve(header.size() - 1);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const double v = detail::parse_cell(cells[c], r, header[c]);
            if (static_cast<int>(c) == y_idx) {
                require(detail::is_integral_value(v), "NonNumericCell",
                        "outcome column must contain integers, got '" + detail::trim(cells[c]) +
                            "' at data row " + std::to_string(r + 1));
                raw_labels.push_back(static_cast<long long>(v));
            } else {
                row.push_back(v);
            }
        }
        rows.push_back(std::move(row));
        ++r;
    }
    require(!rows.empty(), "EmptyFile", "'" + path + "' has no data rows");

    Dataset ds;
    const std::size_t p = header.size() - 1;
    ds.col_names.reserve(p);
    for (std::size_t c = 0; c < header.size(); ++c)
        if (static_cast<int>(c) != y_idx) ds.col_names.push_back(header[c]);

    ds.X = Matrix(rows.size(), p);
    for (std::size_t i = 0; i < rows.size(); ++i) ds.X.set_row(i, rows[i]);

    ds.y = encode_labels(raw_labels, ds.class_map);
    ds.n_classes = static_cast<int>(ds.class_map.size());
    require(ds.n_classes >= 2, "SingleClassOutcome",
            "outcome column '" + y_column + "' has a single distinct value");

    // Categorical flags: explicit list, then auto-detection, then forced-continuous.
    ds.categorical_mask.assign(p, false);
    for (const auto& name : opts.categorical_columns) {
        bool found = false;
        for (std::size_t c = 0; c < p; ++c)
            if (ds.col_names[c] == name) {
                ds.categorical_mask[c] = true;
                found = true;
            }
        require(found, "MissingColumn", "categorical column '" + name + "' not in header");
    }
    if (opts.auto_detect_categorical) {
        for (std::size_t c = 0; c < p; ++c) {
            if (ds.categorical_mask[c]) continue;
            std::set<double> levels;
            bool all_int = true;
            for (std::size_t i = 0; i < ds.X.rows() && all_int; ++i) {
                const double v = ds.X(i, c);
                if (!detail::is_integral_value(v)) all_int = false;
                levels.insert(v);
                if (static_cast<int>(levels.size()) > opts.auto_detect_max_levels) break;
            }
            if (all_int && static_cast<int>(levels.size()) <= opts.auto_detect_max_levels)
                ds.categorical_mask[c] = true;
        }
    }
    for (const auto& name : opts.continuous_columns)
        for (std::size_t c = 0; c < p; ++c)
            if (ds.col_names[c] == name) ds.categorical_mask[c] = false;

    ds.validate();
    return ds;
}

// k near-equal folds per repeat; deterministic in seed. Fold sizes differ by
// at most one, larger folds first.
inline std::vector<SplitPlan> split_folds(std::size_t n, int k, int repeats, std::uint64_t seed) {
    require(k >= 2, "KTooLarge", "fold count must be >= 2");
    require(static_cast<std::size_t>(k) <= n, "KTooLarge",
            "fold count " + std::to_string(k) + " exceeds sample size " + std::to_string(n));
    std::vector<SplitPlan> plans;
    plans.reserve(static_cast<std::size_t>(repeats));
    for (int rep = 0; rep < repeats; ++rep) {
        Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
        std::vector<int> perm = sample_without_replacement(static_cast<int>(n), static_cast<int>(n), rng);
        SplitPlan plan;
        plan.seed = seed;
        plan.fold_assignments.assign(n, 0);
        std::size_t pos = 0;
        for (int f = 0; f < k; ++f) {
            std::size_t size = n / static_cast<std::size_t>(k) +
                               (static_cast<std::size_t>(f) < n % static_cast<std::size_t>(k) ? 1 : 0);
            for (std::size_t j = 0; j < size; ++j) plan.fold_assignments[static_cast<std::size_t>(perm[pos++])] = f;
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

// Random half split for honest inference; halves differ in size by <= 1.
inline std::vector<bool> split_halves(std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(derive_seed(seed, 0x4a1fULL));
    std::vector<int> perm = sample_without_replacement(static_cast<int>(n), static_cast<int>(n), rng);
    std::vector<bool> half(n, false);
    const std::size_t n_first = (n + 1) / 2;
    for (std::size_t i = 0; i < n_first; ++i) half[static_cast<std::size_t>(perm[i])] = true;
    return half;
}

}  // namespace orf
