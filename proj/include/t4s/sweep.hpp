#pragma once

#include "t4s/manifold.hpp"

namespace t4s {

struct SweepOpCounts {
    Index basis = 0, left = 0, right = 0, central = 0, expand = 0;
};

/// Edge variables of one probing-vector set.
struct EdgeCache {
    std::uint64_t base_id = 0;     // 0 for a raw T3
    std::vector<Vector> w;         // probing vectors
    std::vector<Vector> xi;        // U_i^T w_i
    std::vector<Vector> mu;        // d+1 left products, mu[0] = 1
    std::vector<Vector> nu;        // d+1 right products, nu[d] = 1
    std::vector<Vector> eta;       // central contractions
    SweepOpCounts ops;
};

struct ProbeResult {
    std::vector<Vector> z;
    EdgeCache cache;
};

ProbeResult probe_t3(const TuckerTensorTrain& t, const std::vector<Vector>& w);
ProbeResult probe_t3(const ManifoldPoint& p, const std::vector<Vector>& w);

/// Probes of the tangent vector v at p.
std::vector<Vector> apply_J(const ManifoldPoint& p, const EdgeCache& cache, const GaugedVariation& v);
/// Transpose of apply_J (not gauged; apply project_gauge afterwards).
GaugedVariation apply_JT(const ManifoldPoint& p, const EdgeCache& cache, const std::vector<Vector>& zt);
/// Accumulating form of apply_JT: out += J^T zt.
void apply_JT_add(const ManifoldPoint& p, const EdgeCache& cache, const std::vector<Vector>& zt, GaugedVariation& out);

/// Core-tuple variation (same layout, no gauge) for a raw T3.
using CoreVariation = GaugedVariation;

CoreVariation zero_core_variation(const TuckerTensorTrain& t);
std::vector<Vector> apply_J_corewise(const TuckerTensorTrain& t, const EdgeCache& cache, const CoreVariation& v);
CoreVariation apply_JT_corewise(const TuckerTensorTrain& t, const EdgeCache& cache, const std::vector<Vector>& zt);

/// Edge variables for a batch of probing-vector sets, one column per sample.
struct BatchCache {
    std::uint64_t base_id = 0;
    std::vector<Matrix> w, xi, mu, nu, eta;
    Index size() const { return w.empty() ? 0 : w[0].cols(); }
};

BatchCache batch_cache(const ManifoldPoint& p, std::vector<Matrix> w);
/// Probes of p itself, z_i = Ut_i eta_i.
std::vector<Matrix> batch_probe(const ManifoldPoint& p, const BatchCache& c);
std::vector<Matrix> batch_J(const ManifoldPoint& p, const BatchCache& c, const GaugedVariation& v);
/// out += sum over samples of J^T zt (not gauged).
void batch_JT_add(const ManifoldPoint& p, const BatchCache& c, const std::vector<Matrix>& zt, GaugedVariation& out);

}  // namespace t4s
