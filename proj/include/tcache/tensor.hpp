#pragma once

// Dense and sparse N-order tensors plus cyclic (circular) unfolding.
//
// Linearization: the first index varies fastest everywhere in this library,
// both for tensor storage and for the row/column multi-indices of an
// unfolding. Indices and modes are 0-based in code; the COO text format
// is 1-based.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tcache {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when an unfolding spec, shape, or index does not fit a tensor.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class Shape {
public:
    Shape() = default;
    explicit Shape(std::vector<std::size_t> dims);

    std::size_t order() const { return dims_.size(); }
    std::size_t dim(std::size_t mode) const { return dims_.at(mode); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t numel() const { return numel_; }

    std::size_t linear_index(std::span<const std::size_t> index) const;
    std::vector<std::size_t> multi_index(std::size_t linear) const;

    /// "I1xI2x...xIN"
    std::string to_string() const;
    static Shape parse(const std::string& text);

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    std::vector<std::size_t> dims_;
    std::size_t numel_ = 0;
};

class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(Shape shape);
    DenseTensor(Shape shape, std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return values_.size(); }

    double& operator[](std::size_t linear) { return values_[linear]; }
    double operator[](std::size_t linear) const { return values_[linear]; }
    double& at(std::span<const std::size_t> index) { return values_[shape_.linear_index(index)]; }
    double at(std::span<const std::size_t> index) const { return values_[shape_.linear_index(index)]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    void fill(double v);
    /// this += alpha * other
    void axpy(double alpha, const DenseTensor& other);
    void scale(double alpha);
    bool all_zero() const;
    bool all_finite() const;

private:
    Shape shape_;
    std::vector<double> values_;
};

/// COO tensor. Entries are validated on construction: in range, no duplicates.
class SparseTensor {
public:
    struct Entry {
        std::vector<std::size_t> index;
        double value = 0.0;
    };

    SparseTensor() = default;
    SparseTensor(Shape shape, std::vector<Entry> entries);
    /// Builds from precomputed linear positions (must be distinct and < numel).
    SparseTensor(Shape shape, std::vector<std::size_t> positions, std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t nnz() const { return values_.size(); }
    std::span<const std::size_t> positions() const { return positions_; }
    std::span<const double> values() const { return values_; }
    std::vector<std::size_t> index(std::size_t entry) const { return shape_.multi_index(positions_[entry]); }

    DenseTensor to_dense() const;
    /// Same observation pattern, values taken from x.
    SparseTensor gather(const DenseTensor& x) const;
    double fro_norm() const;

private:
    Shape shape_;
    std::vector<std::size_t> positions_;
    std::vector<double> values_;
};

/// Selects the cyclic unfolding X_(k,d): the d consecutive modes ending at
/// `mode` (wrapping around) index the rows, the remaining modes the columns.
struct UnfoldSpec {
    std::size_t mode = 0;
    std::size_t shift = 1;
};

struct UnfoldLayout {
    std::vector<std::size_t> row_modes;  // a, a+1, ..., k (cyclic)
    std::vector<std::size_t> col_modes;  // k+1, ..., a-1 (cyclic)
    std::size_t rows = 0;
    std::size_t cols = 0;
};

UnfoldLayout unfold_layout(const Shape& shape, UnfoldSpec spec);

Matrix unfold(const DenseTensor& x, UnfoldSpec spec);
DenseTensor fold(const Matrix& m, UnfoldSpec spec, const Shape& shape);

double inner(const DenseTensor& x, const DenseTensor& y);
double fro_norm(const DenseTensor& x);

/// x - t on the observed pattern of t (the gradient of 0.5*||x(I) - t(I)||^2).
SparseTensor masked_residual(const DenseTensor& x, const SparseTensor& t);

}  // namespace tcache
