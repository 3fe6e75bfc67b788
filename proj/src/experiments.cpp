#include "t4s/experiments.hpp"

#include "t4s/sketch.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace t4s {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::vector<Index>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "-" : "") << v[i];
    return os.str();
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    std::ofstream os(fs::path(dir) / name);
    if (!os) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    os.precision(17);
    return os;
}

json config_json(const ExperimentConfig& cfg) {
    json j;
    std::istringstream is(cfg.canonical());
    std::string line;
    while (std::getline(is, line)) {
        auto eq = line.find('=');
        j[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return j;
}

void write_metadata(const std::string& dir, double wall, json m = json::object()) {
    m["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
    m["wall_time"] = wall;
    open_out(dir, "metadata.json") << m.dump(2) << '\n';
}

ContinuationOptions continuation_options(const ExperimentConfig& cfg, std::uint64_t seed) {
    ContinuationOptions o;
    o.optimizer = cfg.optimizer;
    o.tau = cfg.tau;
    o.n_chunk = cfg.n_chunk;
    o.ratio_cap = cfg.ratio_cap;
    o.max_stages = cfg.max_stages;
    o.time_limit = cfg.time_limit;
    o.tr.max_iter = cfg.max_iter;
    o.sgd.max_iter = cfg.sgd_max_iter;
    o.sgd.seed = seed + 17;
    o.seed = seed;
    return o;
}

}  // namespace

Matrix power_law_preconditioner(Index n, double power, double sigma) {
    Matrix c = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) c(i, i) = sigma * std::pow(static_cast<double>(i + 1), -power);
    return c;
}

DenseTensor random_tensor_target(Index N, Index M, int k, double power, std::uint64_t seed) {
    std::vector<Index> shape(static_cast<std::size_t>(k), N);
    shape.push_back(M);
    Rng rng(seed);
    DenseTensor a = symmetrize_inputs(DenseTensor::random(shape, rng), k);
    return precondition(a, power_law_preconditioner(N, power), k);
}

std::vector<ProbeRecord> dense_training_records(const DenseTensor& t, int k, Index n, std::uint64_t seed) {
    const Index N = t.extent(0), M = t.extent(k);
    Rng rng(seed);
    std::vector<ProbeRecord> recs;
    recs.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        ProbeRecord r;
        r.x = rng.normal(N);
        r.x /= r.x.norm();
        r.omega = rng.normal(M);
        r.omega /= r.omega.norm();
        std::vector<Vector> w(static_cast<std::size_t>(k), r.x);
        w.push_back(r.omega);
        auto z = probe_dense(t, w);
        r.psi = z[0];
        r.y = z.back();
        recs.push_back(std::move(r));
    }
    return recs;
}

RandomTensorResult run_random_tensor(const ExperimentConfig& cfg, const std::string& out_dir) {
    auto t_start = std::chrono::steady_clock::now();
    Rng master(cfg.seed);
    const std::uint64_t s_target = master.next(), s_train = master.next(), s_test = master.next(),
                        s_fit = master.next();
    DenseTensor target = random_tensor_target(cfg.N, cfg.M, cfg.k, cfg.power, s_target);
    FitProblem problem =
        FitProblem::from_records(dense_training_records(target, cfg.k, cfg.n_s, s_train), cfg.k, cfg.N, cfg.M, cfg.validation);

    std::vector<Vector> xt, yt;
    Rng trng(s_test);
    for (Index i = 0; i < cfg.n_t; ++i) {
        xt.push_back(trng.normal(cfg.N));
        std::vector<Vector> w(static_cast<std::size_t>(cfg.k), xt.back());
        w.push_back(Vector::Ones(cfg.M));
        yt.push_back(probe_dense(target, w).back());
    }

    ContinuationResult fit = fit_with_continuation(problem, continuation_options(cfg, s_fit));
    RandomTensorResult res;
    res.best = fit.best;
    res.time_limited = fit.time_limited;
    for (std::size_t s = 0; s < fit.stages.size(); ++s) {
        const auto& st = fit.stages[s];
        CurvePoint p;
        p.stage = s;
        p.manifold_dim = st.manifold_dim;
        p.n = st.n;
        p.r = st.r;
        p.val_error = st.val_error;
        p.fitted = relative_forward_error(st.t, xt, yt);
        auto base = t3_svd_dense(target, Truncation::ranks(st.n, st.r, true)).t3;
        p.baseline = relative_forward_error(base, xt, yt);
        res.curve.push_back(std::move(p));
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const std::string hash = cfg.hash();
        auto curve = open_out(out_dir, "curve.csv");
        curve << "stage,manifold_dim,method,n,r,relative_forward_error,config_hash,seed\n";
        for (const auto& p : res.curve) {
            curve << p.stage << ',' << p.manifold_dim << ',' << to_string(cfg.optimizer) << '(' << cfg.n_chunk << ")," << join(p.n)
                  << ',' << join(p.r) << ',' << p.fitted << ',' << hash << ',' << cfg.seed << '\n';
            curve << p.stage << ',' << p.manifold_dim << ",t3-svd," << join(p.n) << ',' << join(p.r) << ','
                  << p.baseline << ',' << hash << ',' << cfg.seed << '\n';
        }
        auto stages = open_out(out_dir, "stages.csv");
        write_stage_csv(stages, fit, cfg.seed, false);
        json summary;
        summary["config_hash"] = hash;
        summary["seed"] = cfg.seed;
        summary["config"] = config_json(cfg);
        summary["best_stage"] = res.best;
        summary["best_test_error"] = res.curve[res.best].fitted;
        summary["stages"] = res.curve.size();
        open_out(out_dir, "summary.json") << summary.dump(2) << '\n';
        write_metadata(out_dir, std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count(),
                       {{"time_limited", res.time_limited}});
    }
    return res;
}

ImplicitMapResult run_implicit_map(const ExperimentConfig& cfg, const std::string& out_dir) {
    auto t_start = std::chrono::steady_clock::now();
    Rng master(cfg.seed);
    const std::uint64_t s_map = master.next(), s_out = master.next(), s_in = master.next(), s_train = master.next(),
                        s_test = master.next(), s_fit = master.next();
    auto map = builtin_test_map(cfg.N, cfg.M, s_map);
    const Matrix C = power_law_preconditioner(cfg.N, cfg.power, cfg.sigma);
    const Vector theta0 = Vector::Zero(cfg.N);

    ImplicitMapResult res;
    T4SModel reduced;
    Matrix U = Matrix::Identity(cfg.N, cfg.N), V = Matrix::Identity(cfg.M, cfg.M);
    json stage_log = json::array();
    if (cfg.k >= 1) {
        SketchConfig sc;
        sc.eps = cfg.sketch_eps;
        sc.patience = cfg.sketch_patience;
        sc.max_order = cfg.k;
        V = build_output_basis(*map, C, theta0, sc, s_out).basis;
        U = build_input_basis(*map, C, theta0, V, sc, s_in).basis;
    }
    ReducedImplicitMap rmap = reduce_map(map, U, V, C, theta0);
    reduced.f0 = V.transpose() * map->q(theta0);
    if (cfg.k >= 1 && U.cols() > 0 && V.cols() > 0) {
        auto samples = generate_training_data(rmap, cfg.k, cfg.n_s, s_train);
        for (int j = 1; j <= cfg.k; ++j) {
            FitProblem problem = FitProblem::from_samples(samples, j, cfg.validation);
            auto fit = fit_with_continuation(problem, continuation_options(cfg, s_fit + static_cast<std::uint64_t>(j)));
            reduced.terms.push_back(fit.best_model());
            if (!out_dir.empty()) {
                fs::create_directories(out_dir);
                auto os = open_out(out_dir, "stages_order" + std::to_string(j) + ".csv");
                write_stage_csv(os, fit, cfg.seed, false);
            }
            stage_log.push_back({{"order", j}, {"best_stage", fit.best}, {"val_error", fit.stages[fit.best].val_error}});
        }
    }
    res.reduced_N = U.cols();
    res.reduced_M = V.cols();
    res.model = lift_to_original(reduced, U, V);
    res.model.C = C;
    res.model.theta0 = theta0;
    res.model.meta = json{{"seed", cfg.seed}, {"config_hash", cfg.hash()}, {"fits", stage_log}}.dump();
    const int k_eval = res.model.max_order();

    Rng trng(s_test);
    for (Index i = 0; i < cfg.n_t; ++i) {
        Vector x = trng.normal(cfg.N);
        Vector q = map->q(theta0 + C * x);
        std::vector<double> e;
        for (int j = 0; j <= k_eval; ++j) e.push_back((q - evaluate(res.model, x, j)).norm() / q.norm());
        res.errors.push_back(std::move(e));
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const std::string hash = cfg.hash();
        auto os = open_out(out_dir, "errors.jsonl");
        for (std::size_t i = 0; i < res.errors.size(); ++i)
            os << json{{"sample", i}, {"config_hash", hash}, {"seed", cfg.seed}, {"normalized_error", res.errors[i]}}.dump()
               << '\n';
        save_model(res.model, (fs::path(out_dir) / "model.t4s").string());
        json summary;
        summary["config_hash"] = hash;
        summary["seed"] = cfg.seed;
        summary["config"] = config_json(cfg);
        summary["reduced_N"] = res.reduced_N;
        summary["reduced_M"] = res.reduced_M;
        summary["fits"] = stage_log;
        std::vector<double> med;
        for (int j = 0; j <= k_eval; ++j) {
            std::vector<double> col;
            for (const auto& e : res.errors) col.push_back(e[static_cast<std::size_t>(j)]);
            std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(col.size() / 2), col.end());
            med.push_back(col[col.size() / 2]);
        }
        summary["median_error"] = med;
        open_out(out_dir, "summary.json") << summary.dump(2) << '\n';
        write_metadata(out_dir, std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count());
    }
    return res;
}

CountReport run_deriv_verify(int max_order, std::uint64_t seed) {
    require(max_order >= 1 && max_order <= kTableOrders, "table order out of range");
    auto map = builtin_test_map(12, 6, seed);
    BasePoint base = make_base_point(*map, Vector::Zero(12));
    Rng rng(seed + 1);
    std::vector<Vector> dirs;
    for (int i = 0; i < kTableOrders; ++i) dirs.push_back(rng.normal(12));
    Vector omega = rng.normal(6);

    CountReport rep;
    using E = CountReference;
    for (int j = 1; j <= max_order; ++j) {
        CountRow row;
        row.order = j;
        std::vector<int> labels;
        for (int i = 0; i < j; ++i) labels.push_back(i);
        const Multiset sym = ms_add(0, 0, j), asym = ms_from_labels(labels);
        const Multiset rsym = ms_add(0, 0, j - 1);
        labels.pop_back();
        const Multiset rasym = ms_from_labels(labels);

        SolveCounters c;
        forward_probe(*map, base, {dirs[0]}, sym, &c);
        row.fwd_sym = c.state;
        forward_probe(*map, base, std::vector<Vector>(dirs.begin(), dirs.begin() + j), asym, &c);
        row.fwd_asym = c.state;
        reverse_probe(*map, base, {dirs[0]}, rsym, omega, &c);
        row.rev_sym = c.state + c.adjoint + c.base_adjoint;
        reverse_probe(*map, base, std::vector<Vector>(dirs.begin(), dirs.begin() + j), rasym, omega, &c);
        row.rev_asym = c.state + c.adjoint + c.base_adjoint;
        row.terms_sym = formula_size(FormulaKind::Output, sym);
        row.terms_asym = formula_size(FormulaKind::Output, asym);
        row.terms_rev = formula_size(FormulaKind::Gradient, rsym);

        auto idx = static_cast<std::size_t>(j - 1);
        auto check = [&](const char* col, std::uint64_t got, std::uint64_t want) {
            if (got != want)
                rep.mismatches.push_back(std::string(col) + " order " + std::to_string(j) + ": got " +
                                         std::to_string(got) + ", expected " + std::to_string(want));
        };
        check("forward sym solves", row.fwd_sym, E::fwd_sym[idx]);
        check("forward asym solves", row.fwd_asym, E::fwd_asym[idx]);
        check("reverse sym solves", row.rev_sym, E::rev_sym[idx]);
        check("reverse asym solves", row.rev_asym, E::rev_asym[idx]);
        check("forward sym terms", row.terms_sym, E::terms_sym[idx]);
        check("asym terms", row.terms_asym, E::terms_asym[idx]);
        rep.rows.push_back(row);
    }
    return rep;
}

void print_count_table(std::ostream& os, const CountReport& rep) {
    os << "order  fwd_sym  fwd_asym  rev_sym  rev_asym  terms_sym  terms_asym  terms_rev(diag)\n";
    for (const auto& r : rep.rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%5d  %7llu  %8llu  %7llu  %8llu  %9zu  %10zu  %15zu\n", r.order,
                      static_cast<unsigned long long>(r.fwd_sym), static_cast<unsigned long long>(r.fwd_asym),
                      static_cast<unsigned long long>(r.rev_sym), static_cast<unsigned long long>(r.rev_asym),
                      r.terms_sym, r.terms_asym, r.terms_rev);
        os << buf;
    }
    for (const auto& m : rep.mismatches) os << "MISMATCH " << m << '\n';
}

void write_count_json(std::ostream& os, const CountReport& rep) {
    json rows = json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"order", r.order},
                        {"forward_sym_solves", r.fwd_sym},
                        {"forward_asym_solves", r.fwd_asym},
                        {"reverse_sym_solves", r.rev_sym},
                        {"reverse_asym_solves", r.rev_asym},
                        {"forward_sym_terms", r.terms_sym},
                        {"asym_terms", r.terms_asym},
                        {"reverse_terms_diagnostic", r.terms_rev}});
    os << json{{"rows", rows}, {"mismatches", rep.mismatches}}.dump(2) << '\n';
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
    set_fit_threads(cfg.threads);
    switch (cfg.scenario) {
        case Scenario::RandomTensor: {
            auto res = run_random_tensor(cfg, cfg.out_dir);
            for (const auto& p : res.curve)
                log << "stage " << p.stage << " dim " << p.manifold_dim << " fitted " << p.fitted << " t3-svd "
                    << p.baseline << '\n';
            log << "best stage " << res.best << '\n';
            return 0;
        }
        case Scenario::ImplicitMap: {
            auto res = run_implicit_map(cfg, cfg.out_dir);
            log << "reduced dims N=" << res.reduced_N << " M=" << res.reduced_M << '\n';
            return 0;
        }
        case Scenario::DerivVerify: {
            auto rep = run_deriv_verify(std::min(cfg.k, kTableOrders), cfg.seed);
            print_count_table(log, rep);
            fs::create_directories(cfg.out_dir);
            auto os = open_out(cfg.out_dir, "solve_counts.json");
            write_count_json(os, rep);
            return rep.ok() ? 0 : 2;
        }
    }
    return 0;
}

}  // namespace t4s
