#pragma once

#include "t4s/probing.hpp"

namespace t4s {

struct SketchConfig {
    double eps = 0.01;
    int patience = 5;
    int max_order = 1;
    int reorth_every = 25;
    int max_iterations = 10000;
};

struct SketchResult {
    Matrix basis;          // orthonormal columns
    bool saturated = false;
    int iterations = 0;
};

struct ReducedBases {
    Matrix U;  // whitened input space, N_full x N
    Matrix V;  // output space, M_full x M
};

/// Shared output basis from symmetric forward probes at theta0 along C*noise.
SketchResult build_output_basis(const ImplicitMap& map, const Matrix& c, const Vector& theta0,
                                const SketchConfig& cfg, std::uint64_t seed);

/// Shared input basis from reverse probes with omega = V*noise, x_hat = C^T psi.
SketchResult build_input_basis(const ImplicitMap& map, const Matrix& c, const Vector& theta0, const Matrix& v,
                               const SketchConfig& cfg, std::uint64_t seed);

ReducedImplicitMap reduce_map(std::shared_ptr<const ImplicitMap> map, const Matrix& u, const Matrix& v,
                              const Matrix& c, const Vector& theta0);

}  // namespace t4s
