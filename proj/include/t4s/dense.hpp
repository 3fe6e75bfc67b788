#pragma once

#include "t4s/types.hpp"

#include <vector>

namespace t4s {

/// Element-count ceiling for dense arrays (default 1e8).
Index dense_element_limit();
void set_dense_element_limit(Index limit);

// Row-major storage: the last index varies fastest. kron() uses the block form
// X[a,b]*Y, which is the matching convention for unfoldings.
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(std::vector<Index> shape);
    DenseTensor(std::vector<Index> shape, std::vector<double> data);

    const std::vector<Index>& shape() const { return shape_; }
    Index order() const { return static_cast<Index>(shape_.size()); }
    Index extent(Index i) const { return shape_[static_cast<std::size_t>(i)]; }
    Index size() const { return static_cast<Index>(data_.size()); }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double& operator()(const std::vector<Index>& idx);
    double operator()(const std::vector<Index>& idx) const;
    Index flat_index(const std::vector<Index>& idx) const;

    DenseTensor& operator+=(const DenseTensor& other);
    DenseTensor& operator-=(const DenseTensor& other);
    DenseTensor& operator*=(double a);

    static DenseTensor random(const std::vector<Index>& shape, Rng& rng);

private:
    std::vector<Index> shape_;
    std::vector<double> data_;
};

DenseTensor operator+(DenseTensor a, const DenseTensor& b);
DenseTensor operator-(DenseTensor a, const DenseTensor& b);
DenseTensor operator*(double s, DenseTensor a);

Index checked_product(const std::vector<Index>& extents);

/// i-th unfolding, i in [0, d]: (N_1..N_i) x (N_{i+1}..N_d).
Matrix unfold(const DenseTensor& t, Index i);
DenseTensor fold(const Matrix& m, const std::vector<Index>& shape);

/// i-th matricization, i in [1, d]: N_i x (remaining indices in order).
Matrix matricize(const DenseTensor& t, Index i);

Matrix kron(const Matrix& x, const Matrix& y);
Vector kron(const Vector& x, const Vector& y);

/// out[.., j, ..] = sum_b m(j, b) t[.., b, ..] along 0-based mode.
DenseTensor mode_product(const DenseTensor& t, Index mode, const Matrix& m);

/// Contract a 0-based mode with a vector, removing it.
DenseTensor contract_mode(const DenseTensor& t, Index mode, const Vector& w);

DenseTensor permute(const DenseTensor& t, const std::vector<Index>& perm);

std::vector<Vector> probe_dense(const DenseTensor& t, const std::vector<Vector>& w);

double hs_inner(const DenseTensor& a, const DenseTensor& b);
double hs_norm(const DenseTensor& a);

DenseTensor symmetrize_inputs(const DenseTensor& t, Index k);

/// Array of x -> B(C x_1, ..., C x_k) over the first k indices.
DenseTensor precondition(const DenseTensor& b, const Matrix& c, Index k);

}  // namespace t4s
