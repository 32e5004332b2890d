#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace orf {

// Error with a stable machine-readable code ("MissingColumn", "KTooLarge", ...)
// in front of the human-readable message.
class Error : public std::runtime_error {
  public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

  private:
    std::string code_;
};

inline void require(bool cond, const char* code, const std::string& msg) {
    if (!cond) throw Error(code, msg);
}

// Dense row-major matrix of doubles. Small on purpose: the library only needs
// row access, column stats and element indexing.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double> row_copy(std::size_t r) const {
        return {row(r), row(r) + cols_};
    }

    void set_row(std::size_t r, const std::vector<double>& v) {
        for (std::size_t c = 0; c < cols_; ++c) data_[r * cols_ + c] = v[c];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Standard logistic cdf, numerically stable on both tails.
inline double logistic_cdf(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Logistic pdf lambda(z) = Lambda(z) * (1 - Lambda(z)).
inline double logistic_pdf(double z) {
    const double p = logistic_cdf(z);
    return p * (1.0 - p);
}

// Inverse logistic cdf (logit).
inline double logistic_quantile(double p) {
    return std::log(p / (1.0 - p));
}

// Standard normal cdf via erfc.
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Two-sided p-value under the standard normal.
inline double two_sided_p(double t) {
    return std::erfc(std::fabs(t) / std::sqrt(2.0));
}

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace orf
