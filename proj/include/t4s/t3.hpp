#pragma once

#include "t4s/dense.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace t4s {

/// 3-tensor core of shape left x mid x right, row-major.
struct Core3 {
    Index left = 1, mid = 1, right = 1;
    std::vector<double> data;

    Core3() : data(1, 0.0) {}
    Core3(Index l, Index m, Index r) : left(l), mid(m), right(r), data(static_cast<std::size_t>(l * m * r), 0.0) {}

    double& operator()(Index a, Index b, Index c) { return data[static_cast<std::size_t>((a * mid + b) * right + c)]; }
    double operator()(Index a, Index b, Index c) const {
        return data[static_cast<std::size_t>((a * mid + b) * right + c)];
    }

    // (left*mid) x right
    Eigen::Map<RowMatrix> left_unfolding() { return {data.data(), left * mid, right}; }
    Eigen::Map<const RowMatrix> left_unfolding() const { return {data.data(), left * mid, right}; }
    // left x (mid*right)
    Eigen::Map<RowMatrix> right_unfolding() { return {data.data(), left, mid * right}; }
    Eigen::Map<const RowMatrix> right_unfolding() const { return {data.data(), left, mid * right}; }
    // (left*right) x mid, row index a*right + c
    Matrix outer_unfolding() const;

    static Core3 from_left(const Matrix& m, Index l, Index mid, Index r);
    static Core3 from_right(const Matrix& m, Index l, Index mid, Index r);
    static Core3 from_outer(const Matrix& m, Index l, Index mid, Index r);
    static Core3 random(Index l, Index m, Index r, Rng& rng);

    /// Core with the middle mode contracted against x: left x right.
    Matrix apply_mid(const Vector& x) const;
    /// Middle mode multiplied by a matrix: new mid = m.rows().
    Core3 mid_product(const Matrix& m) const;

    double squared_norm() const;
    Core3& operator+=(const Core3& o);
    Core3& operator*=(double a);
};

Core3 operator+(Core3 a, const Core3& b);
double core_inner(const Core3& a, const Core3& b);

struct TensorTrain {
    std::vector<Core3> cores;

    Index order() const { return static_cast<Index>(cores.size()); }
    std::vector<Index> extents() const;
    std::vector<Index> ranks() const;
    void validate() const;
    static TensorTrain random(const std::vector<Index>& extents, const std::vector<Index>& ranks, Rng& rng);
};

struct TuckerTensorTrain {
    std::vector<Matrix> bases;
    TensorTrain tt;

    Index order() const { return tt.order(); }
    std::vector<Index> shape() const;
    std::vector<Index> tucker_ranks() const { return tt.extents(); }
    std::vector<Index> tt_ranks() const { return tt.ranks(); }
    void validate() const;

    static TuckerTensorTrain random(const std::vector<Index>& shape, const std::vector<Index>& tucker,
                                    const std::vector<Index>& tt_ranks, Rng& rng);
    static TuckerTensorTrain from_tt(const TensorTrain& tt);
};

struct SpectrumReport {
    std::vector<Vector> tucker;  // one per index
    std::vector<Vector> tt;      // one per interior edge 1..d-1
};

/// Truncation controls; combinable. Empty rank caps mean "no cap".
struct Truncation {
    double rel_tol = 0.0;              // per-SVD relative Frobenius tail
    std::vector<Index> max_tucker;     // size d
    std::vector<Index> max_tt;         // size d+1
    bool exact_ranks = false;          // keep exactly the capped ranks, ignore the zero floor

    static Truncation none() { return {}; }
    static Truncation tolerance(double eps) { return {eps, {}, {}, false}; }
    static Truncation ranks(std::vector<Index> n, std::vector<Index> r, bool exact = false) {
        return {0.0, std::move(n), std::move(r), exact};
    }
};

inline constexpr double kSingularFloor = 1e-14;

DenseTensor contract_tt(const TensorTrain& tt);
DenseTensor contract_full(const TuckerTensorTrain& t);

TensorTrain left_orthogonalize(const TensorTrain& tt);
TensorTrain right_orthogonalize(const TensorTrain& tt);
TuckerTensorTrain orthogonalize_bases(const TuckerTensorTrain& t);

struct T3WithSpectrum {
    TuckerTensorTrain t3;
    SpectrumReport spectrum;
};

T3WithSpectrum t3_svd_dense(const DenseTensor& t, const Truncation& trunc = {});
T3WithSpectrum t3_svd_implicit(const TuckerTensorTrain& t, const Truncation& trunc = {});

/// Tensor train symmetric in its first k inputs -> T3 with shared input basis.
TuckerTensorTrain sym_tt_to_t3(const TensorTrain& s, Index k);
/// Largest relative change under swapping adjacent inputs among the first k.
double measured_asymmetry(const TensorTrain& s, Index k);

TuckerTensorTrain zero_pad_ranks(const TuckerTensorTrain& t, const std::vector<Index>& n,
                                 const std::vector<Index>& r);

struct RankPair {
    std::vector<Index> n;
    std::vector<Index> r;
    bool operator==(const RankPair&) const = default;
};

RankPair remove_useless_ranks(const std::vector<Index>& n, const std::vector<Index>& r,
                              const std::vector<Index>& dims);

double t3_norm(const TuckerTensorTrain& t);
TuckerTensorTrain scaled(TuckerTensorTrain t, double a);

// Serialization: "T3TT" magic, u32 version, then extents/ranks/data as
// little-endian i64/f64 in row-major core order.
void write_t3(std::ostream& os, const TuckerTensorTrain& t);
TuckerTensorTrain read_t3(std::istream& is);
std::string t3_to_json(const TuckerTensorTrain& t);
TuckerTensorTrain t3_from_json(const std::string& text);

}  // namespace t4s
