#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"

namespace freqcenter {

/// Dense row-major matrix used for power spectrograms, filterbanks and weights.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& values() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Rank-3 activation tensor with dims (D tokens/channels, F frequency, T time),
/// stored (d, f, t) row-major. Input spectrograms have D == 1.
class ActivationTensor {
public:
    ActivationTensor() = default;
    ActivationTensor(std::size_t d, std::size_t f, std::size_t t, double fill = 0.0)
        : d_(d), f_(f), t_(t), data_(d * f * t, fill) {
        if (d == 0 || f == 0 || t == 0) throw UsageError("ActivationTensor: every dimension must be >= 1");
    }

    std::size_t dims_d() const noexcept { return d_; }
    std::size_t dims_f() const noexcept { return f_; }
    std::size_t dims_t() const noexcept { return t_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t d, std::size_t f, std::size_t t) { return data_[(d * f_ + f) * t_ + t]; }
    double operator()(std::size_t d, std::size_t f, std::size_t t) const { return data_[(d * f_ + f) * t_ + t]; }

    std::span<double> time_row(std::size_t d, std::size_t f) { return {data_.data() + (d * f_ + f) * t_, t_}; }
    std::span<const double> time_row(std::size_t d, std::size_t f) const {
        return {data_.data() + (d * f_ + f) * t_, t_};
    }

    std::vector<double>& values() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    bool same_shape(const ActivationTensor& o) const noexcept { return d_ == o.d_ && f_ == o.f_ && t_ == o.t_; }

    bool all_finite() const noexcept {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const ActivationTensor&) const = default;

private:
    std::size_t d_ = 0;
    std::size_t f_ = 0;
    std::size_t t_ = 0;
    std::vector<double> data_;
};

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Population mean and standard deviation of a set of values, two-pass with
/// compensated sums.
struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

template <class Range>
MeanStd mean_std(const Range& values) {
    CompensatedSum s;
    std::size_t n = 0;
    for (double v : values) {
        s.add(v);
        ++n;
    }
    if (n == 0) return {};
    const double mean = s.value() / static_cast<double>(n);
    CompensatedSum sq;
    for (double v : values) sq.add((v - mean) * (v - mean));
    return {mean, std::sqrt(sq.value() / static_cast<double>(n))};
}

}  // namespace freqcenter
