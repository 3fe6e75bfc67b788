#pragma once

#include "t4s/t3.hpp"

#include <cstdint>

namespace t4s {

struct DegeneratePoint : std::runtime_error {
    RankPair reduced;
    DegeneratePoint(const std::string& msg, RankPair r) : std::runtime_error(msg), reduced(std::move(r)) {}
};

/// A point on the fixed-rank T3 manifold with its orthogonal representations.
struct ManifoldPoint {
    std::uint64_t id = 0;
    std::vector<Index> dims, n, r;
    std::vector<Matrix> U;       // orthonormal bases
    std::vector<Core3> P;        // left-orthogonal cores (P_d holds the norm)
    std::vector<Core3> Q;        // right-orthogonal cores (Q_1 holds the norm)
    std::vector<Core3> O;        // outer-orthogonal cores
    std::vector<Core3> Gt;       // core i with P_{<i}, Q_{>i} around it
    std::vector<Matrix> Ut;      // U_i X_i^T, pairs with O_i

    Index order() const { return static_cast<Index>(U.size()); }
    /// Left-orthogonal representation (U, P).
    TuckerTensorTrain as_t3() const;
};

struct GaugedVariation {
    std::uint64_t base_id = 0;
    std::vector<Matrix> dU;
    std::vector<Core3> dG;
};

ManifoldPoint prepare_point(const TuckerTensorTrain& t);

/// Adds noise of relative size `scale` to every basis and core entry.
TuckerTensorTrain perturb(const TuckerTensorTrain& t, double scale, std::uint64_t seed);

GaugedVariation zero_variation(const ManifoldPoint& p);
GaugedVariation random_variation(const ManifoldPoint& p, Rng& rng);

GaugedVariation project_gauge(const ManifoldPoint& p, const GaugedVariation& v);
GaugedVariation variation_axpy(double a, const GaugedVariation& v, double b, const GaugedVariation& w);
double variation_inner(const GaugedVariation& v, const GaugedVariation& w);
double variation_norm(const GaugedVariation& v);

/// Doubled-rank T3 of the tangent vector (with_point adds p itself).
TuckerTensorTrain tangent_to_doubled(const ManifoldPoint& p, const GaugedVariation& v, bool with_point = false);
DenseTensor tangent_to_dense(const ManifoldPoint& p, const GaugedVariation& v);

/// Round p + v back to ranks (n, r) with the implicit T3-SVD.
TuckerTensorTrain attach_and_retract(const ManifoldPoint& p, const GaugedVariation& v, const std::vector<Index>& n,
                                     const std::vector<Index>& r);
TuckerTensorTrain retract(const ManifoldPoint& p, const GaugedVariation& v);

Index manifold_dimension(const std::vector<Index>& dims, const std::vector<Index>& n, const std::vector<Index>& r);

}  // namespace t4s
