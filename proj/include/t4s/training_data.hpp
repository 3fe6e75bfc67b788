#pragma once

#include "t4s/probing.hpp"

#include <iosfwd>

namespace t4s {

/// One record: inputs (x, omega), and per order j the probes psi_j, y_j
/// (index j-1).
struct ProbeSample {
    std::uint64_t seed = 0;
    Vector x;
    Vector omega;
    std::vector<Vector> psi;
    std::vector<Vector> y;

    int max_order() const { return static_cast<int>(y.size()); }
};

/// Symmetric probes of D^j f(0) for the map x -> q(theta0 + C x) (or any
/// ImplicitMap whose base point is x = 0), orders 1..k.
std::vector<ProbeSample> generate_training_data(const ImplicitMap& reduced, int k, Index n_samples,
                                                std::uint64_t seed);
std::vector<ProbeSample> generate_training_data(std::shared_ptr<const ImplicitMap> map, const Matrix& c,
                                                const Vector& theta0, int k, Index n_samples, std::uint64_t seed);

void write_samples_jsonl(std::ostream& os, const std::vector<ProbeSample>& samples);
std::vector<ProbeSample> read_samples_jsonl(std::istream& is);

}  // namespace t4s
