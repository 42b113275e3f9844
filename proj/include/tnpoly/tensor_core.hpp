#pragma once

// Dense real tensors in row-major layout (last index fastest), plus the three
// primitives everything else is built on: matricization, pairwise contraction
// and the thin SVD.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "tnpoly/errors.hpp"

namespace tnpoly {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Largest dense object (entries) any module will materialize.
inline constexpr Index kMaxDenseEntries = 1'000'000;
/// Largest matrix (entries) handed to the SVD, roughly 3000 x 3000.
inline constexpr Index kMaxSvdEntries = 9'000'000;

inline std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k) out += ",";
        out += std::to_string(shape[k]);
    }
    return out + "]";
}

/// Number of entries of a shape; throws on non-positive extents or overflow.
inline Index shape_size(const Shape& shape) {
    Index n = 1;
    for (Index e : shape) {
        if (e < 1) throw ValidationError("tensor extent must be >= 1, got shape " + shape_string(shape));
        if (n > std::numeric_limits<Index>::max() / e)
            throw CapExceeded("tensor shape " + shape_string(shape) + " overflows the index type");
        n *= e;
    }
    return n;
}

inline Index flatten_index(const Shape& shape, std::span<const Index> idx) {
    if (idx.size() != shape.size())
        throw ValidationError("multi-index length " + std::to_string(idx.size()) + " != rank " +
                              std::to_string(shape.size()));
    Index flat = 0;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= shape[k])
            throw ValidationError("index " + std::to_string(idx[k]) + " out of range on axis " +
                                  std::to_string(k));
        flat = flat * shape[k] + idx[k];
    }
    return flat;
}

inline std::vector<Index> unflatten_index(const Shape& shape, Index flat) {
    std::vector<Index> idx(shape.size());
    for (std::size_t k = shape.size(); k-- > 0;) {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    return idx;
}

/// Advances a row-major odometer; returns false after the last index.
inline bool next_index(const Shape& shape, std::vector<Index>& idx) {
    for (std::size_t k = shape.size(); k-- > 0;) {
        if (++idx[k] < shape[k]) return true;
        idx[k] = 0;
    }
    return false;
}

template <typename Scalar>
class DenseTensor {
    static_assert(std::is_floating_point_v<Scalar>, "DenseTensor needs a real floating point scalar");

public:
    using value_type = Scalar;

    /// Rank-0 tensor holding a single zero.
    DenseTensor() : data_(1, Scalar(0)) {}

    explicit DenseTensor(Shape shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<std::size_t>(shape_size(shape_)), Scalar(0));
    }

    DenseTensor(Shape shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<Index>(data_.size()) != shape_size(shape_))
            throw ValidationError("data length " + std::to_string(data_.size()) + " does not match shape " +
                                  shape_string(shape_));
    }

    static DenseTensor scalar(Scalar value) { return DenseTensor({}, {value}); }

    template <typename Derived>
    static DenseTensor from_matrix(const Eigen::MatrixBase<Derived>& m) {
        DenseTensor out(Shape{m.rows(), m.cols()});
        Eigen::Map<RowMatrix<Scalar>>(out.data_.data(), m.rows(), m.cols()) = m;
        return out;
    }

    Index rank() const { return static_cast<Index>(shape_.size()); }
    const Shape& shape() const { return shape_; }
    Index extent(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
    Index size() const { return static_cast<Index>(data_.size()); }

    std::span<const Scalar> data() const { return data_; }
    std::span<Scalar> data() { return data_; }
    const std::vector<Scalar>& values() const { return data_; }

    Scalar& operator[](Index flat) { return data_[static_cast<std::size_t>(flat)]; }
    const Scalar& operator[](Index flat) const { return data_[static_cast<std::size_t>(flat)]; }

    Scalar& at(std::span<const Index> idx) { return (*this)[flatten_index(shape_, idx)]; }
    const Scalar& at(std::span<const Index> idx) const { return (*this)[flatten_index(shape_, idx)]; }
    Scalar& operator()(std::initializer_list<Index> idx) { return at({idx.begin(), idx.size()}); }
    const Scalar& operator()(std::initializer_list<Index> idx) const { return at({idx.begin(), idx.size()}); }

    /// Same data under a new shape with equal entry count.
    DenseTensor reshaped(Shape shape) const { return DenseTensor(std::move(shape), data_); }

    Eigen::Map<const RowMatrix<Scalar>> matrix() const {
        if (rank() != 2) throw ValidationError("matrix view needs a rank-2 tensor, got rank " + std::to_string(rank()));
        return {data_.data(), shape_[0], shape_[1]};
    }
    Eigen::Map<RowMatrix<Scalar>> matrix() {
        if (rank() != 2) throw ValidationError("matrix view needs a rank-2 tensor, got rank " + std::to_string(rank()));
        return {data_.data(), shape_[0], shape_[1]};
    }
    Eigen::Map<const ColVector<Scalar>> flat() const { return {data_.data(), size()}; }
    Eigen::Map<ColVector<Scalar>> flat() { return {data_.data(), size()}; }

    Scalar squared_norm() const { return flat().squaredNorm(); }
    Scalar norm() const { return flat().norm(); }
    bool all_finite() const { return flat().allFinite(); }

    DenseTensor& operator+=(const DenseTensor& other) {
        require_same_shape(other);
        flat() += other.flat();
        return *this;
    }
    DenseTensor& operator-=(const DenseTensor& other) {
        require_same_shape(other);
        flat() -= other.flat();
        return *this;
    }
    DenseTensor& operator*=(Scalar s) {
        flat() *= s;
        return *this;
    }

    friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
    friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
    friend DenseTensor operator*(DenseTensor a, Scalar s) { return a *= s; }
    friend DenseTensor operator*(Scalar s, DenseTensor a) { return a *= s; }

    friend bool operator==(const DenseTensor& a, const DenseTensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    void require_same_shape(const DenseTensor& other) const {
        if (shape_ != other.shape_)
            throw ValidationError("shape mismatch " + shape_string(shape_) + " vs " + shape_string(other.shape_));
    }

    Shape shape_;
    std::vector<Scalar> data_;
};

using Tensor = DenseTensor<double>;

/// Relative Frobenius distance ||a - b|| / max(||b||, tiny).
template <typename Scalar>
Scalar relative_error(const DenseTensor<Scalar>& a, const DenseTensor<Scalar>& b) {
    const Scalar denom = std::max(b.norm(), std::numeric_limits<Scalar>::min());
    return (a - b).norm() / denom;
}

/// Rank-2 view grouping the first `split` axes as rows and the rest as columns.
template <typename Scalar>
DenseTensor<Scalar> matricize(const DenseTensor<Scalar>& t, Index split) {
    if (split < 0 || split > t.rank())
        throw ValidationError("matricize split " + std::to_string(split) + " outside [0, " +
                              std::to_string(t.rank()) + "]");
    Index rows = 1;
    for (Index k = 0; k < split; ++k) rows *= t.extent(k);
    return t.reshaped({rows, t.size() / rows});
}

/// Axis permutation: output axis k is input axis perm[k].
template <typename Scalar>
DenseTensor<Scalar> permute(const DenseTensor<Scalar>& t, std::span<const Index> perm) {
    const auto rank = static_cast<std::size_t>(t.rank());
    if (perm.size() != rank) throw ValidationError("permutation length does not match tensor rank");
    std::vector<bool> seen(rank, false);
    for (Index p : perm) {
        if (p < 0 || static_cast<std::size_t>(p) >= rank || seen[static_cast<std::size_t>(p)])
            throw ValidationError("invalid axis permutation");
        seen[static_cast<std::size_t>(p)] = true;
    }
    std::vector<Index> in_strides(rank, 1);
    for (std::size_t k = rank; k-- > 1;) in_strides[k - 1] = in_strides[k] * t.shape()[k];

    Shape out_shape(rank);
    std::vector<Index> strides(rank);
    for (std::size_t k = 0; k < rank; ++k) {
        out_shape[k] = t.shape()[static_cast<std::size_t>(perm[k])];
        strides[k] = in_strides[static_cast<std::size_t>(perm[k])];
    }
    DenseTensor<Scalar> out(out_shape);
    std::vector<Index> idx(rank, 0);
    Index flat = 0;
    do {
        Index offset = 0;
        for (std::size_t k = 0; k < rank; ++k) offset += idx[k] * strides[k];
        out[flat++] = t[offset];
    } while (next_index(out_shape, idx));
    return out;
}

using AxisPair = std::pair<Index, Index>;

/// Sums over the paired axes. Output axes: unpaired axes of `a`, then of `b`,
/// each in their original order.
template <typename Scalar>
DenseTensor<Scalar> contract(const DenseTensor<Scalar>& a, const DenseTensor<Scalar>& b,
                             std::span<const AxisPair> pairs) {
    std::vector<bool> used_a(static_cast<std::size_t>(a.rank()), false);
    std::vector<bool> used_b(static_cast<std::size_t>(b.rank()), false);
    for (const auto& [ia, ib] : pairs) {
        if (ia < 0 || ia >= a.rank() || ib < 0 || ib >= b.rank())
            throw ValidationError("contraction axis out of range");
        if (used_a[static_cast<std::size_t>(ia)] || used_b[static_cast<std::size_t>(ib)])
            throw ValidationError("repeated axis in contraction pairs");
        if (a.extent(ia) != b.extent(ib))
            throw ValidationError("contraction extent mismatch: " + std::to_string(a.extent(ia)) + " vs " +
                                  std::to_string(b.extent(ib)));
        used_a[static_cast<std::size_t>(ia)] = used_b[static_cast<std::size_t>(ib)] = true;
    }

    std::vector<Index> perm_a, perm_b;
    Shape out_shape;
    Index rows = 1, cols = 1, inner = 1;
    for (Index k = 0; k < a.rank(); ++k)
        if (!used_a[static_cast<std::size_t>(k)]) {
            perm_a.push_back(k);
            out_shape.push_back(a.extent(k));
            rows *= a.extent(k);
        }
    for (const auto& [ia, ib] : pairs) {
        perm_a.push_back(ia);
        perm_b.push_back(ib);
        inner *= a.extent(ia);
    }
    for (Index k = 0; k < b.rank(); ++k)
        if (!used_b[static_cast<std::size_t>(k)]) {
            perm_b.push_back(k);
            out_shape.push_back(b.extent(k));
            cols *= b.extent(k);
        }

    const DenseTensor<Scalar> pa = permute(a, perm_a);
    const DenseTensor<Scalar> pb = permute(b, perm_b);
    Eigen::Map<const RowMatrix<Scalar>> ma(pa.data().data(), rows, inner);
    Eigen::Map<const RowMatrix<Scalar>> mb(pb.data().data(), inner, cols);

    DenseTensor<Scalar> out(out_shape);
    Eigen::Map<RowMatrix<Scalar>>(out.data().data(), rows, cols).noalias() = ma * mb;
    return out;
}

template <typename Scalar>
DenseTensor<Scalar> contract(const DenseTensor<Scalar>& a, const DenseTensor<Scalar>& b,
                             std::initializer_list<AxisPair> pairs) {
    return contract(a, b, std::span<const AxisPair>(pairs.begin(), pairs.size()));
}

/// Full contraction with one vector per axis.
template <typename Scalar>
Scalar contract_vectors(const DenseTensor<Scalar>& t, std::span<const ColVector<Scalar>> vectors) {
    if (static_cast<Index>(vectors.size()) != t.rank())
        throw ValidationError("need one vector per tensor axis");
    ColVector<Scalar> acc = t.flat();
    for (Index k = t.rank(); k-- > 0;) {
        const Index d = t.extent(k);
        if (vectors[static_cast<std::size_t>(k)].size() != d)
            throw ValidationError("vector length does not match extent on axis " + std::to_string(k));
        Eigen::Map<const RowMatrix<Scalar>> m(acc.data(), acc.size() / d, d);
        acc = m * vectors[static_cast<std::size_t>(k)];
    }
    return acc(0);
}

template <typename Scalar>
struct SVDResult {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = ColVector<Scalar>;

    Matrix left;              // m x k, orthonormal columns
    Vector singular_values;   // k, non-increasing, >= 0
    Matrix right;             // k x n, orthonormal rows

    Index size() const { return singular_values.size(); }

    Matrix reconstruct() const { return left * singular_values.asDiagonal() * right; }

    /// Number of values strictly above `threshold`, at least one.
    Index count_above(Scalar threshold) const {
        Index k = 0;
        while (k < size() && singular_values(k) > threshold) ++k;
        return std::max<Index>(k, 1);
    }

    /// Frobenius error of keeping the leading `keep` triplets.
    Scalar discarded_weight(Index keep) const {
        if (keep >= size()) return Scalar(0);
        return singular_values.tail(size() - keep).norm();
    }

    SVDResult truncated(Index keep) const {
        keep = std::clamp<Index>(keep, 0, size());
        return {left.leftCols(keep), singular_values.head(keep), right.topRows(keep)};
    }
};

/// Thin SVD of an Eigen matrix expression.
template <typename Derived>
SVDResult<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    if (m.rows() * m.cols() > kMaxSvdEntries)
        throw CapExceeded("SVD input " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                          " exceeds the dense size cap");
    if (!m.allFinite()) throw NumericalError("SVD input has non-finite entries");
    Eigen::BDCSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> solver(
        m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {solver.matrixU(), solver.singularValues(), solver.matrixV().transpose()};
}

template <typename Scalar>
SVDResult<Scalar> svd(const DenseTensor<Scalar>& m) {
    if (m.rank() != 2) throw ValidationError("svd needs a rank-2 tensor, got rank " + std::to_string(m.rank()));
    return svd(m.matrix());
}

}  // namespace tnpoly
