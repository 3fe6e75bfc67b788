#pragma once

#include "t4s/config.hpp"
#include "t4s/model.hpp"

#include <array>
#include <iosfwd>

namespace t4s {

/// diag(sigma * i^-power), i = 1..n.
Matrix power_law_preconditioner(Index n, double power, double sigma = 1.0);

/// Symmetrized Gaussian array preconditioned in its first k indices.
DenseTensor random_tensor_target(Index N, Index M, int k, double power, std::uint64_t seed);

/// Normalized training probes (x, omega) of a dense target.
std::vector<ProbeRecord> dense_training_records(const DenseTensor& t, int k, Index n, std::uint64_t seed);

struct CurvePoint {
    std::size_t stage = 0;
    Index manifold_dim = 0;
    std::vector<Index> n, r;
    double val_error = 0.0;
    double fitted = 0.0;    // test relative forward error of the fitted T3
    double baseline = 0.0;  // dense T3-SVD at the same ranks
};

struct RandomTensorResult {
    std::vector<CurvePoint> curve;
    std::size_t best = 0;
    bool time_limited = false;
};

/// out_dir empty: no files written.
RandomTensorResult run_random_tensor(const ExperimentConfig& cfg, const std::string& out_dir = {});

struct ImplicitMapResult {
    T4SModel model;                          // lifted to the full spaces
    Index reduced_N = 0, reduced_M = 0;
    std::vector<std::vector<double>> errors;  // per test sample, orders 0..k
};

ImplicitMapResult run_implicit_map(const ExperimentConfig& cfg, const std::string& out_dir = {});

inline constexpr int kTableOrders = 10;

struct CountRow {
    int order = 0;
    std::uint64_t fwd_sym = 0, fwd_asym = 0, rev_sym = 0, rev_asym = 0;
    std::size_t terms_sym = 0, terms_asym = 0;
    std::size_t terms_rev = 0;  // diagnostic only
};

struct CountReport {
    std::vector<CountRow> rows;
    std::vector<std::string> mismatches;
    bool ok() const { return mismatches.empty(); }
};

struct CountReference {
    static constexpr std::array<std::uint64_t, kTableOrders> fwd_sym{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    static constexpr std::array<std::uint64_t, kTableOrders> fwd_asym{1, 3, 7, 15, 31, 63, 127, 255, 511, 1023};
    static constexpr std::array<std::uint64_t, kTableOrders> rev_sym{1, 3, 5, 7, 9, 11, 13, 15, 17, 19};
    static constexpr std::array<std::uint64_t, kTableOrders> rev_asym{1, 3, 7, 15, 31, 63, 127, 255, 511, 1023};
    static constexpr std::array<std::size_t, kTableOrders> terms_sym{2, 4, 7, 12, 19, 30, 45, 67, 97, 139};
    static constexpr std::array<std::size_t, kTableOrders> terms_asym{2,    5,     15,    52,     203,
                                                                      877,  4140,  21147, 115975, 678570};
};

/// Live solve counters and symbolic term counts for orders 1..max_order.
CountReport run_deriv_verify(int max_order = kTableOrders, std::uint64_t seed = 0);
void print_count_table(std::ostream& os, const CountReport& report);
void write_count_json(std::ostream& os, const CountReport& report);

/// Dispatches on cfg.scenario; returns a process exit code (0 or 2).
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace t4s
