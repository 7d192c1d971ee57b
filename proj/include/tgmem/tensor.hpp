#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tgmem {

// Dense row-major matrix of doubles. Column vectors are (n, 1). Entries are
// required to be finite; operations that could produce NaN/Inf check their
// output and raise NumericError.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols);  // zero-filled
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Tensor column(std::initializer_list<double> values);
    static Tensor scalar(double value);
    static Tensor from_span(std::span<const double> values);  // (n, 1)

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Tensor& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    bool all_finite() const;
    // Throws NumericError mentioning `context` if any entry is NaN/Inf.
    void require_finite(const std::string& context) const;

    bool operator==(const Tensor& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Value-level helpers used by plumbing that does not need gradients
// (memory stores, trackers, simulators).
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double k, const Tensor& a);
double dot_flat(const Tensor& a, const Tensor& b);
double frobenius_norm(const Tensor& a);

}  // namespace tgmem
