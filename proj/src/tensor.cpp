#include "tcache/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tcache {

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 3) {
        throw ShapeError("tensor order must be at least 3, got " + std::to_string(dims_.size()));
    }
    numel_ = 1;
    for (std::size_t d : dims_) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive: " + to_string());
        numel_ *= d;
    }
}

std::size_t Shape::linear_index(std::span<const std::size_t> index) const {
    if (index.size() != dims_.size()) {
        throw ShapeError("index has " + std::to_string(index.size()) + " components, tensor order is " +
                         std::to_string(dims_.size()));
    }
    std::size_t linear = 0;
    std::size_t stride = 1;
    for (std::size_t n = 0; n < dims_.size(); ++n) {
        if (index[n] >= dims_[n]) {
            throw ShapeError("index " + std::to_string(index[n]) + " out of range for mode " + std::to_string(n) +
                             " of size " + std::to_string(dims_[n]));
        }
        linear += index[n] * stride;
        stride *= dims_[n];
    }
    return linear;
}

std::vector<std::size_t> Shape::multi_index(std::size_t linear) const {
    std::vector<std::size_t> index(dims_.size());
    for (std::size_t n = 0; n < dims_.size(); ++n) {
        index[n] = linear % dims_[n];
        linear /= dims_[n];
    }
    return index;
}

std::string Shape::to_string() const {
    std::string out;
    for (std::size_t n = 0; n < dims_.size(); ++n) {
        if (n) out += 'x';
        out += std::to_string(dims_[n]);
    }
    return out;
}

Shape Shape::parse(const std::string& text) {
    std::vector<std::size_t> dims;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, 'x')) {
        try {
            std::size_t used = 0;
            long long v = std::stoll(part, &used);
            if (used != part.size() || v <= 0) throw std::invalid_argument(part);
            dims.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ShapeError("malformed shape '" + text + "'");
        }
    }
    return Shape(std::move(dims));
}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)), values_(shape_.numel(), 0.0) {}

DenseTensor::DenseTensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_.numel()) {
        throw ShapeError("value count " + std::to_string(values_.size()) + " does not match shape " +
                         shape_.to_string());
    }
}

void DenseTensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void DenseTensor::axpy(double alpha, const DenseTensor& other) {
    if (other.shape_ != shape_) throw ShapeError("axpy: shape mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += alpha * other.values_[i];
}

void DenseTensor::scale(double alpha) {
    for (double& v : values_) v *= alpha;
}

bool DenseTensor::all_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

bool DenseTensor::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

SparseTensor::SparseTensor(Shape shape, std::vector<Entry> entries) : shape_(std::move(shape)) {
    positions_.reserve(entries.size());
    values_.reserve(entries.size());
    for (const Entry& e : entries) {
        positions_.push_back(shape_.linear_index(e.index));
        values_.push_back(e.value);
    }
    std::vector<std::size_t> sorted = positions_;
    std::sort(sorted.begin(), sorted.end());
    auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end()) {
        throw ShapeError("duplicate COO index at linear position " + std::to_string(*dup));
    }
}

SparseTensor::SparseTensor(Shape shape, std::vector<std::size_t> positions, std::vector<double> values)
    : shape_(std::move(shape)), positions_(std::move(positions)), values_(std::move(values)) {
    if (positions_.size() != values_.size()) throw ShapeError("positions/values length mismatch");
    std::vector<std::size_t> sorted = positions_;
    std::sort(sorted.begin(), sorted.end());
    if (!sorted.empty() && sorted.back() >= shape_.numel()) throw ShapeError("COO position out of range");
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ShapeError("duplicate COO position");
    }
}

DenseTensor SparseTensor::to_dense() const {
    DenseTensor out(shape_);
    for (std::size_t e = 0; e < positions_.size(); ++e) out[positions_[e]] = values_[e];
    return out;
}

SparseTensor SparseTensor::gather(const DenseTensor& x) const {
    if (x.shape() != shape_) throw ShapeError("gather: shape mismatch");
    SparseTensor out;
    out.shape_ = shape_;
    out.positions_ = positions_;
    out.values_.resize(values_.size());
    for (std::size_t e = 0; e < positions_.size(); ++e) out.values_[e] = x[positions_[e]];
    return out;
}

double SparseTensor::fro_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
}

UnfoldLayout unfold_layout(const Shape& shape, UnfoldSpec spec) {
    const std::size_t order = shape.order();
    if (spec.mode >= order) {
        throw ShapeError("unfold mode " + std::to_string(spec.mode) + " out of range for order " +
                         std::to_string(order));
    }
    if (spec.shift < 1 || spec.shift >= order) {
        throw ShapeError("unfold shift must lie in 1..N-1, got " + std::to_string(spec.shift));
    }
    // first row mode a = k - d + 1 (cyclic)
    const std::size_t first = (spec.mode + order + 1 - spec.shift) % order;
    UnfoldLayout layout;
    layout.rows = 1;
    layout.cols = 1;
    for (std::size_t j = 0; j < order; ++j) {
        std::size_t n = (first + j) % order;
        if (j < spec.shift) {
            layout.row_modes.push_back(n);
            layout.rows *= shape.dim(n);
        } else {
            layout.col_modes.push_back(n);
            layout.cols *= shape.dim(n);
        }
    }
    return layout;
}

namespace {

// Per-mode contribution to the row and column index of the unfolding.
struct UnfoldStrides {
    std::vector<std::size_t> row;
    std::vector<std::size_t> col;
};

UnfoldStrides unfold_strides(const Shape& shape, const UnfoldLayout& layout) {
    UnfoldStrides s{std::vector<std::size_t>(shape.order(), 0), std::vector<std::size_t>(shape.order(), 0)};
    std::size_t stride = 1;
    for (std::size_t n : layout.row_modes) {
        s.row[n] = stride;
        stride *= shape.dim(n);
    }
    stride = 1;
    for (std::size_t n : layout.col_modes) {
        s.col[n] = stride;
        stride *= shape.dim(n);
    }
    return s;
}

// Calls fn(linear, row, col) for every tensor element in storage order.
template <typename Fn>
void for_each_unfolded(const Shape& shape, const UnfoldLayout& layout, Fn&& fn) {
    const UnfoldStrides s = unfold_strides(shape, layout);
    const std::size_t order = shape.order();
    const std::size_t inner_dim = shape.dim(0);
    const std::size_t r0 = s.row[0];
    const std::size_t c0 = s.col[0];
    std::vector<std::size_t> idx(order, 0);
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t linear = 0;
    const std::size_t total = shape.numel();
    while (linear < total) {
        for (std::size_t i = 0; i < inner_dim; ++i) {
            fn(linear + i, row + i * r0, col + i * c0);
        }
        linear += inner_dim;
        // odometer over modes 1..N-1
        for (std::size_t n = 1; n < order; ++n) {
            ++idx[n];
            row += s.row[n];
            col += s.col[n];
            if (idx[n] < shape.dim(n)) break;
            row -= s.row[n] * idx[n];
            col -= s.col[n] * idx[n];
            idx[n] = 0;
        }
    }
}

}  // namespace

Matrix unfold(const DenseTensor& x, UnfoldSpec spec) {
    const UnfoldLayout layout = unfold_layout(x.shape(), spec);
    Matrix m(static_cast<Eigen::Index>(layout.rows), static_cast<Eigen::Index>(layout.cols));
    double* out = m.data();
    const std::span<const double> v = x.values();
    for_each_unfolded(x.shape(), layout, [&](std::size_t linear, std::size_t row, std::size_t col) {
        out[row + col * layout.rows] = v[linear];
    });
    return m;
}

DenseTensor fold(const Matrix& m, UnfoldSpec spec, const Shape& shape) {
    const UnfoldLayout layout = unfold_layout(shape, spec);
    if (static_cast<std::size_t>(m.rows()) != layout.rows || static_cast<std::size_t>(m.cols()) != layout.cols) {
        throw ShapeError("fold: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                         ", unfolding of " + shape.to_string() + " needs " + std::to_string(layout.rows) + "x" +
                         std::to_string(layout.cols));
    }
    DenseTensor x(shape);
    const double* in = m.data();
    std::span<double> v = x.values();
    for_each_unfolded(shape, layout, [&](std::size_t linear, std::size_t row, std::size_t col) {
        v[linear] = in[row + col * layout.rows];
    });
    return x;
}

double inner(const DenseTensor& x, const DenseTensor& y) {
    if (x.shape() != y.shape()) throw ShapeError("inner: shape mismatch");
    const auto a = x.values();
    const auto b = y.values();
    return std::transform_reduce(a.begin(), a.end(), b.begin(), 0.0);
}

double fro_norm(const DenseTensor& x) { return std::sqrt(inner(x, x)); }

SparseTensor masked_residual(const DenseTensor& x, const SparseTensor& t) {
    if (x.shape() != t.shape()) throw ShapeError("masked_residual: shape mismatch");
    SparseTensor r = t.gather(x);
    std::vector<double> values(t.nnz());
    for (std::size_t e = 0; e < t.nnz(); ++e) values[e] = r.values()[e] - t.values()[e];
    std::vector<std::size_t> positions(t.positions().begin(), t.positions().end());
    return SparseTensor(t.shape(), std::move(positions), std::move(values));
}

}  // namespace tcache
