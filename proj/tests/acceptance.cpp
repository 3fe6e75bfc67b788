// Acceptance suite: one PASS/FAIL line per criterion.
#include "oracles.hpp"

#include "t4s/experiments.hpp"
#include "t4s/sketch.hpp"
#include "t4s/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace t4s;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double median3(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome count_table() {
    auto rep = run_deriv_verify(kTableOrders, 0);
    for (const auto& m : rep.mismatches) std::cerr << "  " << m << '\n';
    return {rep.ok(), std::to_string(rep.mismatches.size()) + " mismatches over " + std::to_string(rep.rows.size()) + " orders"};
}

Outcome oracle_equivalence() {
    Rng rng(2024);
    double worst_probe = 0, worst_j = 0, worst_adj = 0;
    const int instances = 200;
    for (int inst = 0; inst < instances; ++inst) {
        std::size_t d = 1 + static_cast<std::size_t>(rng.next() % 5);
        std::vector<Index> dims, n, r(d + 1, 1);
        for (std::size_t i = 0; i < d; ++i) {
            dims.push_back(1 + static_cast<Index>(rng.next() % 8));
            n.push_back(1 + static_cast<Index>(rng.next() % 4));
        }
        for (std::size_t i = 1; i < d; ++i) r[i] = 1 + static_cast<Index>(rng.next() % 4);
        auto rr = remove_useless_ranks(n, r, dims);
        auto t = TuckerTensorTrain::random(dims, rr.n, rr.r, rng);
        std::vector<Vector> w, zt;
        for (Index m : dims) {
            w.push_back(rng.normal(m));
            zt.push_back(rng.normal(m));
        }
        auto dense = oracle::contract(t);
        worst_probe = std::max(worst_probe, oracle::rel(oracle::probe(dense, w), probe_t3(t, w).z));

        auto p = prepare_point(t);
        auto res = probe_t3(p, w);
        worst_probe = std::max(worst_probe, oracle::rel(oracle::probe(dense, w), res.z));
        auto v = project_gauge(p, random_variation(p, rng));
        auto jv = apply_J(p, res.cache, v);
        worst_j = std::max(worst_j, oracle::rel(oracle::probe(oracle::tangent(p, v), w), jv));
        auto jtz = project_gauge(p, apply_JT(p, res.cache, zt));
        double lhs = 0;
        for (std::size_t i = 0; i < d; ++i) lhs += zt[i].dot(jv[i]);
        double rhs = variation_inner(jtz, v);
        double scale = 0;
        for (std::size_t i = 0; i < d; ++i) scale += zt[i].norm() * jv[i].norm();
        scale = std::max(scale, variation_norm(jtz) * variation_norm(v));
        if (scale > 0) worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / scale);
    }
    bool ok = worst_probe <= 1e-11 && worst_j <= 1e-11 && worst_adj <= 1e-10;
    return {ok, std::to_string(instances) + " instances, probe " + fmt("%.1e", worst_probe) + ", J " + fmt("%.1e", worst_j) +
                    ", adjoint " + fmt("%.1e", worst_adj)};
}

Outcome svd_round_trip() {
    Rng rng(7);
    double worst_rec = 0, worst_sv = 0;
    for (int inst = 0; inst < 60; ++inst) {
        std::size_t d = 2 + static_cast<std::size_t>(inst % 4);
        std::vector<Index> dims;
        for (std::size_t i = 0; i < d; ++i) dims.push_back(2 + static_cast<Index>(rng.next() % 4));
        auto dense = DenseTensor::random(dims, rng);
        worst_rec = std::max(worst_rec, oracle::rel(dense, contract_full(t3_svd_dense(dense).t3)));

        std::vector<Index> n(d), r(d + 1, 1);
        for (std::size_t i = 0; i < d; ++i) n[i] = 1 + static_cast<Index>(rng.next() % 4);
        for (std::size_t i = 1; i < d; ++i) r[i] = 1 + static_cast<Index>(rng.next() % 4);
        auto rr = remove_useless_ranks(n, r, dims);
        auto t = TuckerTensorTrain::random(dims, rr.n, rr.r, rng);
        auto ref = t3_svd_dense(contract_full(t)).spectrum;
        auto impl = t3_svd_implicit(t).spectrum;
        auto cmp = [&](const Vector& a, const Vector& b, Index keep) {
            for (Index i = 0; i < keep; ++i) worst_sv = std::max(worst_sv, std::abs(a[i] - b[i]) / b[i]);
        };
        for (std::size_t i = 0; i < d; ++i) cmp(impl.tucker[i], ref.tucker[i], rr.n[i]);
        for (std::size_t i = 0; i + 1 < d; ++i) cmp(impl.tt[i], ref.tt[i], rr.r[i + 1]);
    }
    return {worst_rec <= 1e-12 && worst_sv <= 1e-10,
            "reconstruction " + fmt("%.1e", worst_rec) + ", singular values " + fmt("%.1e", worst_sv)};
}

Outcome derivative_probes() {
    const Index dim = 12, out = 6;
    auto map = builtin_test_map(dim, out, 31);
    Rng rng(32);
    Vector theta0 = 0.1 * rng.normal(dim);
    auto base = make_base_point(*map, theta0);
    Vector x = rng.normal(dim).normalized(), omega = rng.normal(out).normalized();
    oracle::Fn f = [&](const Vector& th) { return map->q(th); };
    double worst_fwd = 0, worst_rev = 0, worst_cons = 0;
    const double h = 0.05;
    const int half = 6;
    for (int j = 1; j <= 3; ++j) {
        auto y = forward_probe(*map, base, {x}, ms_add(0, 0, j));
        worst_fwd = std::max(worst_fwd, oracle::rel(oracle::fd_directional(f, theta0, x, j, h, half), y));

        auto psi = reverse_probe(*map, base, {x}, ms_add(0, 0, j - 1), omega);
        Vector fd(dim);
        for (Index i = 0; i < dim; ++i) {
            Vector e = Vector::Unit(dim, i);
            Vector g = j == 1 ? oracle::fd_directional(f, theta0, e, 1, h, half)
                              : oracle::fd_mixed(f, theta0, x, j - 1, e, 1, h, half);
            fd[i] = omega.dot(g);
        }
        worst_rev = std::max(worst_rev, oracle::rel(fd, psi));

        double lhs = omega.dot(y);
        double rhs = psi.dot(x);
        worst_cons = std::max(worst_cons, std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300));
    }
    return {worst_fwd <= 1e-5 && worst_rev <= 1e-5 && worst_cons <= 1e-9,
            "forward " + fmt("%.1e", worst_fwd) + ", reverse " + fmt("%.1e", worst_rev) + ", consistency " +
                fmt("%.1e", worst_cons)};
}

// Symmetric order-2 plant: T(a,b,o) = sum_m (U S_m U^T)(a,b) v_m(o).
DenseTensor symmetric_plant(Index N, Index M, std::uint64_t seed) {
    Rng rng(seed);
    Matrix u = rng.normal(N, 2), v = rng.normal(M, 2);
    DenseTensor t({N, N, M});
    for (Index m = 0; m < 2; ++m) {
        Matrix s = rng.normal(2, 2);
        s = Matrix(s + s.transpose());
        Matrix a = u * s * u.transpose();
        for (Index i = 0; i < N; ++i)
            for (Index j = 0; j < N; ++j)
                for (Index o = 0; o < M; ++o) t({i, j, o}) += a(i, j) * v(o, m);
    }
    return t;
}

double test_error(const TuckerTensorTrain& fit, const DenseTensor& target, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vector> xs, ys;
    for (int i = 0; i < 200; ++i) {
        xs.push_back(rng.normal(target.extent(0)));
        ys.push_back(probe_dense(target, {xs.back(), xs.back(), Vector::Ones(target.extent(2))}).back());
    }
    return relative_forward_error(fit, xs, ys);
}

Outcome optimizer_plant() {
    const Index N = 10, M = 8, n_s = 300;
    std::vector<double> tr_err, sgd_err;
    int tr_iters = 0;
    for (std::uint64_t seed : {1, 2, 3}) {
        auto target = symmetric_plant(N, M, 100 + seed);
        auto problem = FitProblem::from_records(dense_training_records(target, 2, n_s, 200 + seed), 2, N, M);
        ContinuationOptions tr;
        tr.seed = seed;
        tr.tr.max_iter = 100;
        tr.val_floor = 1e-9;
        auto a = fit_with_continuation(problem, tr);
        tr_err.push_back(test_error(a.best_model(), target, 300 + seed));
        tr_iters = std::max(tr_iters, a.stages[a.best].iterations);

        ContinuationOptions sg;
        sg.optimizer = Optimizer::McSgd;
        sg.seed = seed;
        sg.sgd.seed = 400 + seed;
        sg.val_floor = 1e-4;
        auto b = fit_with_continuation(problem, sg);
        sgd_err.push_back(test_error(b.best_model(), target, 300 + seed));
    }
    double tr_med = median3(tr_err), sgd_med = median3(sgd_err);
    return {tr_med <= 1e-6 && tr_iters <= 100 && sgd_med <= 1e-3,
            "TR-RMGN median " + fmt("%.1e", tr_med) + " (" + std::to_string(tr_iters) + " iterations), MC-SGD median " +
                fmt("%.1e", sgd_med)};
}

Outcome scaled_random_tensor() {
    std::vector<double> descent, plateau;
    bool stopped = false;
    for (std::uint64_t seed : {11, 12, 13}) {
        ExperimentConfig cfg;
        cfg.k = 3;
        cfg.N = 12;
        cfg.M = 10;
        cfg.n_s = 400;
        cfg.n_t = 500;
        cfg.n_chunk = 1;
        cfg.seed = seed;
        cfg.time_limit = 300;  // a third of the budget per seed
        auto res = run_random_tensor(cfg);
        stopped = stopped || res.time_limited;
        std::size_t argmin = 0;
        for (std::size_t i = 0; i < res.curve.size(); ++i)
            if (res.curve[i].fitted < res.curve[argmin].fitted) argmin = i;
        double worst = 0;
        for (std::size_t i = 0; i <= argmin; ++i)
            worst = std::max(worst, res.curve[i].fitted / std::max(res.curve[i].baseline, 1e-300));
        double rise = 1;
        for (std::size_t i = argmin; i < res.curve.size(); ++i)
            rise = std::max(rise, res.curve[i].fitted / res.curve[argmin].fitted);
        std::cerr << "  seed " << seed << ": " << res.curve.size() << " stages, min error " << res.curve[argmin].fitted
                  << " at dim " << res.curve[argmin].manifold_dim << ", fitted/baseline " << worst << ", post-min rise "
                  << rise << '\n';
        descent.push_back(worst);
        plateau.push_back(rise);
    }
    double d = median3(descent), p = median3(plateau);
    return {!stopped && d <= 3 && p <= 3, "median fitted/baseline " + fmt("%.2f", d) + ", median post-min rise " +
                                              fmt("%.2f", p) + (stopped ? ", continuation cut at time limit" : "")};
}

Outcome retraction_order() {
    Rng rng(5);
    auto p = prepare_point(TuckerTensorTrain::random({5, 4, 6, 3}, {2, 3, 3, 2}, {1, 2, 3, 2, 1}, rng));
    auto v = project_gauge(p, random_variation(p, rng));
    v = variation_axpy(1.0 / variation_norm(v), v, 0.0, v);
    auto x = contract_full(p.as_t3());
    auto dv = tangent_to_dense(p, v);
    std::vector<double> ts, errs;
    for (double t = 1e-5; t <= 1e-2 * 1.0001; t *= std::sqrt(10.0)) {
        auto r = retract(p, variation_axpy(t, v, 0.0, v));
        ts.push_back(t);
        errs.push_back(hs_norm(contract_full(r) - (x + t * dv)));
    }
    double slope = oracle::loglog_slope(ts, errs);
    return {slope >= 1.9, "slope " + fmt("%.3f", slope)};
}

Outcome taylor_order() {
    const Index N = 3, M = 2;
    const int k = 3;
    auto map = builtin_test_map(N, M, 41);
    Matrix c = 0.5 * Matrix::Identity(N, N);
    Vector theta0 = Vector::Zero(N);
    auto samples = generate_training_data(map, c, theta0, k, 250, 42);
    T4SModel model;
    model.f0 = map->q(theta0);
    double worst_fit = 0;
    for (int j = 1; j <= k; ++j) {
        auto problem = FitProblem::from_samples(samples, j);
        ContinuationOptions o;
        o.seed = 43 + static_cast<std::uint64_t>(j);
        o.val_floor = 1e-12;
        o.tr.max_iter = 200;
        auto res = fit_with_continuation(problem, o);
        worst_fit = std::max(worst_fit, res.stages[res.best].val_error);
        model.terms.push_back(res.best_model());
    }
    Rng rng(44);
    Vector dir = rng.normal(N).normalized();
    std::string detail = "fit error " + fmt("%.1e", worst_fit) + ", slopes";
    bool ok = true;
    for (int order = 1; order <= k; ++order) {
        std::vector<double> rs, errs;
        for (double r = 0.4; r >= 0.4 / 16 * 0.999; r /= std::sqrt(2.0)) {
            Vector x = r * dir;
            rs.push_back(r);
            errs.push_back((map->q(theta0 + c * x) - evaluate(model, x, order)).norm());
        }
        double slope = oracle::loglog_slope(rs, errs);
        ok = ok && slope >= order + 0.8;
        detail += " " + fmt("%.2f", slope);
    }
    return {ok, detail};
}

Outcome sketch_criterion() {
    const Index dim = 20, out = 15;
    auto map = builtin_test_map(dim, out, 51);
    Matrix c = power_law_preconditioner(dim, 2.0);
    Vector theta0 = Vector::Zero(dim);
    SketchConfig cfg;
    cfg.eps = 0.05;
    cfg.patience = 5;
    cfg.max_order = 3;
    Matrix v = build_output_basis(*map, c, theta0, cfg, 52).basis;
    auto base = make_base_point(*map, theta0);
    Rng rng(53);
    std::vector<std::vector<double>> ratios(3);
    for (int s = 0; s < 100; ++s) {
        ProbeSession session(*map, base, {Vector(c * rng.normal(dim))});
        for (int j = 1; j <= 3; ++j) {
            Vector y = session.forward(ms_add(0, 0, j));
            ratios[static_cast<std::size_t>(j - 1)].push_back((y - v * (v.transpose() * y)).norm() / y.norm());
        }
    }
    bool ok = true;
    std::string detail = "basis " + std::to_string(v.cols()) + "/" + std::to_string(out) + ", p90";
    for (auto& r : ratios) {
        std::sort(r.begin(), r.end());
        double p90 = r[89];
        ok = ok && p90 <= 3 * cfg.eps;
        detail += " " + fmt("%.3f", p90);
    }
    return {ok, detail};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget;  // seconds
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"count-table-exactness", 10, count_table},
        {"oracle-equivalence", 60, oracle_equivalence},
        {"t3-svd-round-trip", 30, svd_round_trip},
        {"derivative-probes", 60, derivative_probes},
        {"optimizer-plant", 300, optimizer_plant},
        {"scaled-random-tensor", 900, scaled_random_tensor},
        {"retraction-order", 30, retraction_order},
        {"taylor-order", 120, taylor_order},
        {"sketch-criterion", 120, sketch_criterion},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool pass = o.pass && secs <= c.budget;
        failures += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << "  " << i + 1 << " " << c.name << ": " << o.detail << " ["
                  << fmt("%.1f", secs) << " s / " << fmt("%.0f", c.budget) << " s]" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
