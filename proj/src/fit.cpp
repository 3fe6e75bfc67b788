#include "t4s/fit.hpp"

#include <atomic>
#include <chrono>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace t4s {

namespace {

std::atomic<int> g_threads{1};

constexpr std::size_t kChunk = 8;

// Runs fn(task) for task = 0..count-1 on the worker threads. Callers combine
// per-task results in task order, so sums do not depend on the thread count.
template <class F>
void parallel_tasks(std::size_t count, F&& fn) {
    int threads = std::min<int>(g_threads.load(), static_cast<int>(std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t c = 0; c < count; ++c) fn(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < count; c = next++) fn(c);
        });
    for (auto& th : pool) th.join();
}

// fn(chunk, begin, end) over fixed-size chunks of n samples.
template <class F>
void for_chunks(std::size_t n, F&& fn) {
    parallel_tasks((n + kChunk - 1) / kChunk, [&](std::size_t c) { fn(c, c * kChunk, std::min(n, (c + 1) * kChunk)); });
}

std::size_t n_chunks(std::size_t n) { return (n + kChunk - 1) / kChunk; }

// Gauss-Newton products run on fixed batches of samples.
constexpr std::size_t kBatch = 64;

std::size_t n_batches(std::size_t n) { return (n + kBatch - 1) / kBatch; }

template <class F>
void for_batches(std::size_t n, F&& fn) {
    parallel_tasks(n_batches(n), [&](std::size_t c) { fn(c, c * kBatch, std::min(n, (c + 1) * kBatch)); });
}

std::string join(const std::vector<Index>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "-" : "") << v[i];
    return os.str();
}

GaugedVariation scaled(const GaugedVariation& v, double a) { return variation_axpy(a, v, 0.0, v); }

}  // namespace

void set_fit_threads(int threads) { g_threads = std::max(1, threads); }
int fit_threads() { return g_threads.load(); }

std::vector<Index> FitProblem::dims() const {
    std::vector<Index> d(static_cast<std::size_t>(order), N);
    d.push_back(M);
    return d;
}

Index FitProblem::data_dimension() const { return static_cast<Index>(train.size()) * (order * N + M); }

FitProblem FitProblem::from_records(std::vector<ProbeRecord> records, int order, Index N, Index M,
                                    double validation_fraction) {
    require(order >= 1, "fit order must be positive");
    require(validation_fraction > 0.0 && validation_fraction < 1.0, "validation fraction must lie in (0,1)");
    FitProblem p;
    p.order = order;
    p.N = N;
    p.M = M;
    auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(records.size())));
    std::size_t n_train = records.size() - n_val;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        require(r.x.size() == N && r.psi.size() == N && r.omega.size() == M && r.y.size() == M,
                "probe record dimensions disagree with the problem");
        (i < n_train ? p.train : p.validation).push_back(std::move(records[i]));
    }
    return p;
}

FitProblem FitProblem::from_samples(const std::vector<ProbeSample>& samples, int order, double validation_fraction) {
    require(!samples.empty(), "no samples");
    std::vector<ProbeRecord> recs;
    recs.reserve(samples.size());
    for (const auto& s : samples) {
        require(s.max_order() >= order, "sample lacks the requested order");
        auto j = static_cast<std::size_t>(order - 1);
        recs.push_back({s.x, s.omega, s.psi[j], s.y[j]});
    }
    return from_records(std::move(recs), order, samples[0].x.size(), samples[0].omega.size(), validation_fraction);
}

std::vector<Vector> probe_vectors(const ProbeRecord& rec, int order) {
    std::vector<Vector> w(static_cast<std::size_t>(order), rec.x);
    w.push_back(rec.omega);
    return w;
}

std::vector<Vector> residual_blocks(const ProbeRecord& rec, const std::vector<Vector>& z, int order) {
    std::vector<Vector> b(static_cast<std::size_t>(order + 1));
    for (int l = 0; l < order; ++l) b[static_cast<std::size_t>(l)] = rec.psi - z[static_cast<std::size_t>(l)];
    b.back() = rec.y - z.back();
    return b;
}

namespace {

template <class Probe>
double loss_impl(const FitProblem& problem, Probe&& probe) {
    const std::size_t n = problem.train.size();
    require(n > 0, "empty training set");
    std::vector<double> part(n_chunks(n), 0.0);
    for_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
        for (std::size_t s = b; s < e; ++s) {
            const auto& rec = problem.train[s];
            for (const auto& r : residual_blocks(rec, probe(probe_vectors(rec, problem.order)), problem.order))
                part[c] += r.squaredNorm();
        }
    });
    return std::accumulate(part.begin(), part.end(), 0.0) / (2.0 * static_cast<double>(n));
}

}  // namespace

double loss(const TuckerTensorTrain& t, const FitProblem& problem) {
    return loss_impl(problem, [&](const std::vector<Vector>& w) { return probe_t3(t, w).z; });
}

double loss(const DenseTensor& t, const FitProblem& problem) {
    return loss_impl(problem, [&](const std::vector<Vector>& w) { return probe_dense(t, w); });
}

// ---------------------------------------------------------------------------

LocalModel::LocalModel(const ManifoldPoint& p, const FitProblem& problem)
    : LocalModel(p, problem, [&] {
          std::vector<std::size_t> all(problem.train.size());
          std::iota(all.begin(), all.end(), std::size_t{0});
          return all;
      }()) {}

LocalModel::LocalModel(const ManifoldPoint& p, const FitProblem& problem, std::vector<std::size_t> subset)
    : p_(p), problem_(problem), subset_(std::move(subset)) {
    const std::size_t n = subset_.size();
    require(n > 0, "empty sample subset");
    const int k = problem_.order;
    const std::size_t nb = n_batches(n);
    batches_.resize(nb);
    std::vector<double> part(nb, 0.0);
    std::vector<GaugedVariation> acc(nb);
    for_batches(n, [&](std::size_t c, std::size_t b, std::size_t e) {
        const auto cols = static_cast<Index>(e - b);
        Matrix x(problem_.N, cols), om(problem_.M, cols), psi(problem_.N, cols), y(problem_.M, cols);
        for (std::size_t s = b; s < e; ++s) {
            const auto& rec = problem_.train[subset_[s]];
            const auto j = static_cast<Index>(s - b);
            x.col(j) = rec.x;
            om.col(j) = rec.omega;
            psi.col(j) = rec.psi;
            y.col(j) = rec.y;
        }
        std::vector<Matrix> w(static_cast<std::size_t>(k), x);
        w.push_back(om);
        batches_[c] = batch_cache(p_, std::move(w));
        auto z = batch_probe(p_, batches_[c]);
        for (int l = 0; l < k; ++l) z[static_cast<std::size_t>(l)] = psi - z[static_cast<std::size_t>(l)];
        z.back() = y - z.back();
        for (const auto& r : z) part[c] += r.squaredNorm();
        acc[c] = zero_variation(p_);
        batch_JT_add(p_, batches_[c], z, acc[c]);
    });
    const double inv = 1.0 / static_cast<double>(n);
    loss_ = 0.5 * inv * std::accumulate(part.begin(), part.end(), 0.0);
    GaugedVariation g = acc[0];
    for (std::size_t c = 1; c < acc.size(); ++c) g = variation_axpy(1.0, g, 1.0, acc[c]);
    grad_ = scaled(project_gauge(p_, g), inv);
}

GaugedVariation LocalModel::hessian(const GaugedVariation& v) const {
    const std::size_t n = subset_.size();
    std::vector<GaugedVariation> acc(batches_.size());
    for_batches(n, [&](std::size_t c, std::size_t, std::size_t) {
        acc[c] = zero_variation(p_);
        batch_JT_add(p_, batches_[c], batch_J(p_, batches_[c], v), acc[c]);
    });
    GaugedVariation h = acc[0];
    for (std::size_t c = 1; c < acc.size(); ++c) h = variation_axpy(1.0, h, 1.0, acc[c]);
    return scaled(project_gauge(p_, h), 1.0 / static_cast<double>(n));
}

double LocalModel::curvature(const GaugedVariation& v) const {
    const std::size_t n = subset_.size();
    std::vector<double> part(batches_.size(), 0.0);
    for_batches(n, [&](std::size_t c, std::size_t, std::size_t) {
        for (const auto& z : batch_J(p_, batches_[c], v)) part[c] += z.squaredNorm();
    });
    return std::accumulate(part.begin(), part.end(), 0.0) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

namespace {

struct Iterate {
    std::unique_ptr<ManifoldPoint> p;
    std::unique_ptr<LocalModel> m;
};

Iterate make_iterate(const TuckerTensorTrain& t, const FitProblem& problem) {
    Iterate it;
    it.p = std::make_unique<ManifoldPoint>(prepare_point(t));
    it.m = std::make_unique<LocalModel>(*it.p, problem);
    return it;
}

}  // namespace

FitResult tr_rmgn(const FitProblem& problem, const TuckerTensorTrain& init, const TrustRegionOptions& opts) {
    require(opts.radius0 > 0.0, "trust region radius must be positive");
    Iterate cur = make_iterate(init, problem);
    TrustRegionState st{opts.radius0, 0.0};
    FitResult res;
    const double g0 = variation_norm(cur.m->gradient());
    for (int it = 1; it <= opts.max_iter; ++it) {
        const GaugedVariation& g = cur.m->gradient();
        double gn = variation_norm(g);
        if (cur.m->loss() <= opts.loss_floor || gn == 0.0 || gn <= opts.grad_rtol * g0) break;
        double tol = std::min(0.5, std::sqrt(gn)) * gn;
        const LocalModel& model = *cur.m;
        auto cg = cg_steihaug<GaugedVariation>([&](const GaugedVariation& v) { return model.hessian(v); }, g,
                                               st.radius, tol, opts.cg_max_iter);
        TrustRegionStep step;
        step.iter = it;
        step.grad_norm = gn;
        step.cg_iterations = cg.iterations;
        if (!(cg.model_decrease > 0.0)) {
            step.loss = cur.m->loss();
            step.radius = st.radius;
            res.trace.push_back(step);
            break;
        }
        Iterate cand = make_iterate(retract(*cur.p, cg.step), problem);
        st.rho = (cur.m->loss() - cand.m->loss()) / cg.model_decrease;
        bool boundary = cg.exit == CgExit::Boundary || cg.exit == CgExit::NegativeCurvature;
        if (st.rho < opts.shrink_below)
            st.radius *= 0.25;
        else if (st.rho > opts.expand_above && boundary)
            st.radius = std::min(2.0 * st.radius, opts.radius_max);
        step.accepted = st.rho > opts.accept;
        if (step.accepted) cur = std::move(cand);
        step.loss = cur.m->loss();
        step.radius = st.radius;
        step.rho = st.rho;
        res.trace.push_back(step);
        res.iterations = it;
        if (st.radius < opts.radius_min) break;
    }
    res.t = cur.p->as_t3();
    res.loss = cur.m->loss();
    return res;
}

SgdState sgd_schedule(const SgdOptions& opts, Index n_train) {
    require(n_train > 0, "empty training set");
    SgdState s;
    s.batch = opts.batch > 0 ? std::min(opts.batch, n_train) : std::max<Index>(1, n_train / 10);
    double per_epoch = static_cast<double>(n_train) / static_cast<double>(s.batch);
    double tau = opts.c_tau * per_epoch;
    s.alpha = 1.0 - std::exp(-1.0 / tau);
    s.lag = std::max(1, static_cast<int>(std::lround(opts.c_t * per_epoch)));
    return s;
}

FitResult mc_sgd(const FitProblem& problem, const TuckerTensorTrain& init, const SgdOptions& opts) {
    const Index n = static_cast<Index>(problem.train.size());
    SgdState st = sgd_schedule(opts, n);
    Rng rng(opts.seed);
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto p = std::make_unique<ManifoldPoint>(prepare_point(init));
    std::vector<double> smoothed;
    FitResult res;
    for (int k = 0; k < opts.max_iter; ++k) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        std::vector<std::size_t> batch(order.begin(), order.begin() + st.batch);
        LocalModel m(*p, problem, std::move(batch));
        st.smoothed = k == 0 ? m.loss() : st.alpha * m.loss() + (1.0 - st.alpha) * st.smoothed;
        smoothed.push_back(st.smoothed);
        if (k >= st.lag && st.smoothed - smoothed[static_cast<std::size_t>(k - st.lag)] > 0.0) break;
        const GaugedVariation& g = m.gradient();
        double gg = variation_inner(g, g);
        if (gg == 0.0) break;
        double c = m.curvature(g);
        double t = c < opts.guard * gg ? opts.fallback / std::sqrt(gg) : gg / c;
        TrustRegionStep step;
        step.iter = k + 1;
        step.loss = m.loss();
        step.grad_norm = std::sqrt(gg);
        step.radius = t;
        step.accepted = true;
        res.trace.push_back(step);
        auto next = std::make_unique<ManifoldPoint>(prepare_point(retract(*p, scaled(g, t))));
        p = std::move(next);
        res.iterations = k + 1;
    }
    res.t = p->as_t3();
    res.loss = loss(res.t, problem);
    return res;
}

// ---------------------------------------------------------------------------

ContinuationState edge_conditions(const TuckerTensorTrain& t, double tau, Index n_chunk) {
    ContinuationState s;
    s.n = t.tucker_ranks();
    s.r = t.tt_ranks();
    s.tau = tau;
    s.n_chunk = n_chunk;
    auto spec = t3_svd_implicit(t).spectrum;
    auto kappa = [](const Vector& sv, Index rank) {
        if (sv.size() == 0 || sv[0] <= 0.0) return 1.0;
        double last = rank <= sv.size() ? sv[rank - 1] : 0.0;
        return sv[0] / std::max(last, kSingularFloor * sv[0]);
    };
    const Index d = t.order();
    for (Index i = 0; i < d; ++i) s.kappa_tucker.push_back(kappa(spec.tucker[static_cast<std::size_t>(i)], s.n[static_cast<std::size_t>(i)]));
    s.kappa_tt.assign(static_cast<std::size_t>(d + 1), 1.0);
    for (Index i = 1; i < d; ++i)
        s.kappa_tt[static_cast<std::size_t>(i)] = kappa(spec.tt[static_cast<std::size_t>(i - 1)], s.r[static_cast<std::size_t>(i)]);
    return s;
}

RankPair propose_ranks(const ContinuationState& s, const std::vector<Index>& dims) {
    const std::size_t d = s.n.size();
    double kmax = 1.0;
    for (double k : s.kappa_tucker) kmax = std::max(kmax, k);
    for (double k : s.kappa_tt) kmax = std::max(kmax, k);
    const double threshold = kmax / s.tau;
    RankPair p{s.n, s.r};
    for (std::size_t i = 0; i < d; ++i)
        if (s.kappa_tucker[i] < threshold) p.n[i] += s.n_chunk;
    for (std::size_t i = 1; i < d; ++i)
        if (s.kappa_tt[i] < threshold) p.r[i] += s.n_chunk;
    RankPair q = remove_useless_ranks(p.n, p.r, dims);
    if (q.n == s.n && q.r == s.r) {
        p = {s.n, s.r};
        for (auto& v : p.n) v += s.n_chunk;
        for (std::size_t i = 1; i < d; ++i) p.r[i] += s.n_chunk;
        q = remove_useless_ranks(p.n, p.r, dims);
    }
    return q;
}

RankPair propose_ranks(const TuckerTensorTrain& t, double tau, Index n_chunk) {
    return propose_ranks(edge_conditions(t, tau, n_chunk), t.shape());
}

TuckerTensorTrain initial_guess(const FitProblem& problem, std::uint64_t seed) {
    const auto dims = problem.dims();
    std::vector<Index> ones_n(dims.size(), 1), ones_r(dims.size() + 1, 1);
    Rng rng(seed);
    auto t = TuckerTensorTrain::random(dims, ones_n, ones_r, rng);
    double ms = 0.0;
    for (const auto& rec : problem.train) ms += rec.y.squaredNorm();
    double rms = std::sqrt(ms / static_cast<double>(std::max<std::size_t>(problem.train.size(), 1)));
    return scaled(std::move(t), rms / t3_norm(t));
}

ContinuationResult fit_with_continuation(const FitProblem& problem, const ContinuationOptions& opts) {
    using Clock = std::chrono::steady_clock;
    ContinuationResult res;
    const auto dims = problem.dims();
    const double data = static_cast<double>(problem.data_dimension());
    const auto& held_out = problem.validation.empty() ? problem.train : problem.validation;

    bool zero_data = std::all_of(problem.train.begin(), problem.train.end(), [](const ProbeRecord& r) {
        return r.y.squaredNorm() == 0.0 && r.psi.squaredNorm() == 0.0;
    });
    TuckerTensorTrain init = initial_guess(problem, opts.seed);
    if (zero_data) {
        TuckerTensorTrain z = scaled(init, 0.0);
        res.stages.push_back({z.tucker_ranks(), z.tt_ranks(), manifold_dimension(dims, z.tucker_ranks(), z.tt_ranks()),
                              0.0, relative_forward_error(z, held_out), 0.0, 0, z});
        return res;
    }

    const auto start = Clock::now();
    for (int stage = 0; stage < opts.max_stages; ++stage) {
        auto t0 = Clock::now();
        FitResult fr;
        if (opts.optimizer == Optimizer::TrRmgn) {
            fr = tr_rmgn(problem, init, opts.tr);
        } else {
            SgdOptions so = opts.sgd;
            so.seed = opts.sgd.seed + static_cast<std::uint64_t>(stage);
            fr = mc_sgd(problem, init, so);
        }
        ContinuationStage cs;
        cs.n = fr.t.tucker_ranks();
        cs.r = fr.t.tt_ranks();
        cs.manifold_dim = manifold_dimension(dims, cs.n, cs.r);
        cs.train_loss = fr.loss;
        cs.val_error = relative_forward_error(fr.t, held_out);
        cs.iterations = fr.iterations;
        cs.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
        cs.t = fr.t;
        res.stages.push_back(std::move(cs));
        const auto& last = res.stages.back();
        if (opts.on_stage) opts.on_stage(last);

        if (opts.ratio_cap <= 0.0 || last.val_error <= opts.val_floor) break;
        RankPair next = propose_ranks(last.t, opts.tau, opts.n_chunk);
        if (next.n == last.n && next.r == last.r) break;
        if (data / static_cast<double>(manifold_dimension(dims, next.n, next.r)) < opts.ratio_cap) break;
        if (opts.time_limit > 0.0 && std::chrono::duration<double>(Clock::now() - start).count() > opts.time_limit) {
            res.time_limited = true;
            break;
        }
        init = perturb(zero_pad_ranks(last.t, next.n, next.r), 1e-10, opts.seed + static_cast<std::uint64_t>(stage) + 1);
    }
    for (std::size_t i = 1; i < res.stages.size(); ++i)
        if (res.stages[i].val_error < res.stages[res.best].val_error) res.best = i;
    return res;
}

Vector forward_value(const TuckerTensorTrain& t, const Vector& x) {
    const Index d = t.order();
    std::vector<Vector> w(static_cast<std::size_t>(d - 1), x);
    w.push_back(Vector::Ones(t.shape().back()));
    return probe_t3(t, w).z.back();
}

double relative_forward_error(const TuckerTensorTrain& t, const std::vector<Vector>& x, const std::vector<Vector>& y) {
    require(x.size() == y.size(), "test input/output counts differ");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (y[i] - forward_value(t, x[i])).squaredNorm();
        den += y[i].squaredNorm();
    }
    if (den == 0.0) return std::sqrt(num);
    return std::sqrt(num / den);
}

double relative_forward_error(const TuckerTensorTrain& t, const std::vector<ProbeRecord>& records) {
    std::vector<Vector> x, y;
    for (const auto& r : records) {
        x.push_back(r.x);
        y.push_back(r.y);
    }
    return relative_forward_error(t, x, y);
}

void write_stage_csv(std::ostream& os, const ContinuationResult& res, std::uint64_t seed, bool with_wall_time) {
    os << "stage,n,r,manifold_dim,train_loss,val_error," << (with_wall_time ? "wall_time," : "") << "seed\n";
    os.precision(17);
    for (std::size_t i = 0; i < res.stages.size(); ++i) {
        const auto& s = res.stages[i];
        os << i << ',' << join(s.n) << ',' << join(s.r) << ',' << s.manifold_dim << ',' << s.train_loss << ','
           << s.val_error << ',';
        if (with_wall_time) os << s.wall_time << ',';
        os << seed << '\n';
    }
}

void write_tr_trace_csv(std::ostream& os, const std::vector<TrustRegionStep>& trace) {
    os << "iter,loss,grad_norm,radius,rho,cg_iterations,accepted\n";
    os.precision(17);
    for (const auto& s : trace)
        os << s.iter << ',' << s.loss << ',' << s.grad_norm << ',' << s.radius << ',' << s.rho << ','
           << s.cg_iterations << ',' << (s.accepted ? 1 : 0) << '\n';
}

}  // namespace t4s
