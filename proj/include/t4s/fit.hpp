#pragma once

#include "t4s/sweep.hpp"
#include "t4s/training_data.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iosfwd>

namespace t4s {

/// Per-order probe data in the form the loss consumes.
struct ProbeRecord {
    Vector x;
    Vector omega;
    Vector psi;
    Vector y;
};

struct FitProblem {
    int order = 1;
    Index N = 0, M = 0;
    std::vector<ProbeRecord> train;
    std::vector<ProbeRecord> validation;

    std::vector<Index> dims() const;
    /// Data dimension n_train * (order*N + M).
    Index data_dimension() const;

    /// Last `validation_fraction` of the samples go to validation.
    static FitProblem from_samples(const std::vector<ProbeSample>& samples, int order, double validation_fraction = 0.2);
    static FitProblem from_records(std::vector<ProbeRecord> records, int order, Index N, Index M,
                                   double validation_fraction = 0.2);
};

/// Probing vectors (x, ..., x, omega).
std::vector<Vector> probe_vectors(const ProbeRecord& rec, int order);

/// Residual blocks b_l = psi - a_l (l <= order), b_{order+1} = y - a_{order+1}.
std::vector<Vector> residual_blocks(const ProbeRecord& rec, const std::vector<Vector>& z, int order);

double loss(const TuckerTensorTrain& t, const FitProblem& problem);
double loss(const DenseTensor& t, const FitProblem& problem);

/// Deterministic ordered reduction over samples: chunk layout does not depend on thread count.
void set_fit_threads(int threads);
int fit_threads();

// ---------------------------------------------------------------------------
// CG-Steihaug on an abstract inner-product space.

template <class V>
struct VectorOps;

template <>
struct VectorOps<Vector> {
    static double inner(const Vector& a, const Vector& b) { return a.dot(b); }
    static Vector axpy(double a, const Vector& x, double b, const Vector& y) { return a * x + b * y; }
    static Vector zero_like(const Vector& x) { return Vector::Zero(x.size()); }
};

template <>
struct VectorOps<GaugedVariation> {
    static double inner(const GaugedVariation& a, const GaugedVariation& b) { return variation_inner(a, b); }
    static GaugedVariation axpy(double a, const GaugedVariation& x, double b, const GaugedVariation& y) {
        return variation_axpy(a, x, b, y);
    }
    static GaugedVariation zero_like(const GaugedVariation& x) { return variation_axpy(0.0, x, 0.0, x); }
};

enum class CgExit { Converged, Boundary, NegativeCurvature, MaxIterations };

template <class V>
struct CgResult {
    V step;
    CgExit exit = CgExit::Converged;
    int iterations = 0;
    double model_decrease = 0.0;  // <g,s> - 1/2 <s,Hs>
};

/// Approximately minimizes -<g,s> + 1/2 <s,Hs> over ||s|| <= radius.
template <class V>
CgResult<V> cg_steihaug(const std::function<V(const V&)>& H, const V& g, double radius, double tol,
                        int max_iter = 100) {
    using Ops = VectorOps<V>;
    CgResult<V> res;
    V z = Ops::zero_like(g), Hz = Ops::zero_like(g);
    V r = g, d = g;
    double rr = Ops::inner(r, r);
    auto finish = [&](const V& s, const V& Hs, CgExit e) {
        res.step = s;
        res.exit = e;
        res.model_decrease = Ops::inner(g, s) - 0.5 * Ops::inner(s, Hs);
        return res;
    };
    if (std::sqrt(rr) <= tol) return finish(z, Hz, CgExit::Converged);
    // tau >= 0 with ||z + tau d|| = radius
    auto to_boundary = [&](const V& dir) {
        double dd = Ops::inner(dir, dir), zd = Ops::inner(z, dir), zz = Ops::inner(z, z);
        double disc = std::max(0.0, zd * zd + dd * (radius * radius - zz));
        return (-zd + std::sqrt(disc)) / dd;
    };
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it + 1;
        V Hd = H(d);
        double dHd = Ops::inner(d, Hd);
        if (dHd <= 0.0) {
            double tau = to_boundary(d);
            return finish(Ops::axpy(1.0, z, tau, d), Ops::axpy(1.0, Hz, tau, Hd), CgExit::NegativeCurvature);
        }
        double alpha = rr / dHd;
        V zn = Ops::axpy(1.0, z, alpha, d);
        if (std::sqrt(Ops::inner(zn, zn)) >= radius) {
            double tau = to_boundary(d);
            return finish(Ops::axpy(1.0, z, tau, d), Ops::axpy(1.0, Hz, tau, Hd), CgExit::Boundary);
        }
        Hz = Ops::axpy(1.0, Hz, alpha, Hd);
        z = std::move(zn);
        r = Ops::axpy(1.0, r, -alpha, Hd);
        double rr_new = Ops::inner(r, r);
        if (std::sqrt(rr_new) <= tol) return finish(z, Hz, CgExit::Converged);
        d = Ops::axpy(1.0, r, rr_new / rr, d);
        rr = rr_new;
    }
    return finish(z, Hz, CgExit::MaxIterations);
}

// ---------------------------------------------------------------------------
// Gauss-Newton model at a fixed point.

/// Caches and residuals of a sample subset at a prepared point.
class LocalModel {
public:
    LocalModel(const ManifoldPoint& p, const FitProblem& problem, std::vector<std::size_t> subset);
    LocalModel(const ManifoldPoint& p, const FitProblem& problem);

    double loss() const { return loss_; }
    /// (1/n) Pi J^T b.
    const GaugedVariation& gradient() const { return grad_; }
    /// (1/n) Pi J^T J v.
    GaugedVariation hessian(const GaugedVariation& v) const;
    /// (1/n) ||J v||^2.
    double curvature(const GaugedVariation& v) const;
    Index batch_size() const { return static_cast<Index>(subset_.size()); }

private:
    const ManifoldPoint& p_;
    const FitProblem& problem_;
    std::vector<std::size_t> subset_;
    std::vector<BatchCache> batches_;  // fixed-size sample batches, in order
    double loss_ = 0.0;
    GaugedVariation grad_;
};

struct TrustRegionOptions {
    double radius0 = 1.0;
    double radius_max = 1e3;
    double accept = 0.1;
    double shrink_below = 0.25;
    double expand_above = 0.75;
    int max_iter = 100;
    int cg_max_iter = 100;
    double grad_rtol = 1e-10;     // stop when ||g|| <= grad_rtol * ||g_0||
    double loss_floor = 0.0;      // stop when loss <= loss_floor
    double radius_min = 1e-14;
};

struct TrustRegionStep {
    int iter = 0;
    double loss = 0.0, grad_norm = 0.0, radius = 0.0, rho = 0.0;
    int cg_iterations = 0;
    bool accepted = false;
};

struct TrustRegionState {
    double radius = 1.0;
    double rho = 0.0;
};

struct FitResult {
    TuckerTensorTrain t;
    double loss = 0.0;
    int iterations = 0;
    std::vector<TrustRegionStep> trace;
};

FitResult tr_rmgn(const FitProblem& problem, const TuckerTensorTrain& init, const TrustRegionOptions& opts = {});

struct SgdOptions {
    double c_tau = 1.0;
    double c_t = 3.0;
    Index batch = 0;              // 0 -> floor(n_s / 10), at least 1
    int max_iter = 5000;
    std::uint64_t seed = 0;
    double guard = 1e-30;         // degenerate-curvature threshold
    double fallback = 1e-3;       // step multiplier on the guard branch
};

struct SgdState {
    double smoothed = 0.0;
    double alpha = 0.0;
    int lag = 1;
    Index batch = 1;
};

/// Smoothing and lag parameters derived from the batch size.
SgdState sgd_schedule(const SgdOptions& opts, Index n_train);

FitResult mc_sgd(const FitProblem& problem, const TuckerTensorTrain& init, const SgdOptions& opts = {});

// ---------------------------------------------------------------------------
// Rank continuation.

enum class Optimizer { TrRmgn, McSgd };

struct ContinuationOptions {
    Optimizer optimizer = Optimizer::TrRmgn;
    TrustRegionOptions tr;
    SgdOptions sgd;
    double tau = 10.0;
    Index n_chunk = 1;
    double ratio_cap = 2.0;       // <= 0 disables continuation
    int max_stages = 100;
    double val_floor = 0.0;       // stop once validation error <= val_floor
    double time_limit = 0.0;      // seconds; no new stage starts past it, <= 0 disables
    std::uint64_t seed = 0;
    std::function<void(const struct ContinuationStage&)> on_stage;  // progress hook, may be empty
};

struct ContinuationState {
    std::vector<Index> n, r;
    std::vector<double> kappa_tucker;  // d entries
    std::vector<double> kappa_tt;      // d+1 entries, boundary fixed at 1
    double tau = 10.0;
    Index n_chunk = 1;
};

/// Edge condition numbers of t from its implicit T3-SVD.
ContinuationState edge_conditions(const TuckerTensorTrain& t, double tau, Index n_chunk);

RankPair propose_ranks(const ContinuationState& state, const std::vector<Index>& dims);
RankPair propose_ranks(const TuckerTensorTrain& t, double tau, Index n_chunk);

struct ContinuationStage {
    std::vector<Index> n, r;
    Index manifold_dim = 0;
    double train_loss = 0.0;
    double val_error = 0.0;
    double wall_time = 0.0;
    int iterations = 0;
    TuckerTensorTrain t;
};

struct ContinuationResult {
    std::size_t best = 0;
    bool time_limited = false;
    std::vector<ContinuationStage> stages;
    const TuckerTensorTrain& best_model() const { return stages[best].t; }
};

/// Rank-all-ones starting point scaled to the RMS forward-probe magnitude.
TuckerTensorTrain initial_guess(const FitProblem& problem, std::uint64_t seed);

ContinuationResult fit_with_continuation(const FitProblem& problem, const ContinuationOptions& opts = {});

/// sqrt(sum ||y - T(x,...,x)||^2 / sum ||y||^2).
double relative_forward_error(const TuckerTensorTrain& t, const std::vector<Vector>& x, const std::vector<Vector>& y);
double relative_forward_error(const TuckerTensorTrain& t, const std::vector<ProbeRecord>& records);
/// Forward probe T(x, ..., x) of a T3 whose last index is the output.
Vector forward_value(const TuckerTensorTrain& t, const Vector& x);

/// wall_time is omitted when with_wall_time is false (reproducible output).
void write_stage_csv(std::ostream& os, const ContinuationResult& res, std::uint64_t seed, bool with_wall_time = true);
void write_tr_trace_csv(std::ostream& os, const std::vector<TrustRegionStep>& trace);

}  // namespace t4s
