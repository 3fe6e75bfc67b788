#include "t4s/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kMismatch = 2;
constexpr int kConfigError = 3;

int probe_command(int order, const std::string& mode, t4s::Index dim, std::uint64_t seed, bool asym) {
    using namespace t4s;
    auto map = builtin_test_map(dim, dim / 2 + 1, seed);
    BasePoint base = make_base_point(*map, Vector::Zero(dim));
    Rng rng(seed + 1);
    std::vector<Vector> dirs;
    std::vector<int> labels;
    int n_dirs = asym ? order : 1;
    for (int i = 0; i < n_dirs; ++i) {
        dirs.push_back(rng.normal(dim));
        labels.push_back(i);
    }
    SolveCounters c;
    Vector out;
    std::uint64_t solves = 0, expected = 0;
    if (mode == "fwd") {
        Multiset a = asym ? ms_from_labels(labels) : ms_add(0, 0, order);
        out = forward_probe(*map, base, dirs, a, &c);
        solves = c.state;
        expected = asym ? (1ull << order) - 1 : static_cast<std::uint64_t>(order);
    } else {
        if (asym) labels.pop_back();
        Multiset a = asym ? ms_from_labels(labels) : ms_add(0, 0, order - 1);
        out = reverse_probe(*map, base, dirs, a, rng.normal(map->output_dim()), &c);
        solves = c.state + c.adjoint + c.base_adjoint;
        expected = asym ? (1ull << order) - 1 : static_cast<std::uint64_t>(2 * order - 1);
    }
    std::cout.precision(17);
    std::cout << "probe " << mode << " order " << order << (asym ? " asym" : " sym") << "\n";
    for (Index i = 0; i < out.size(); ++i) std::cout << out[i] << '\n';
    std::cout << "incremental solves " << solves << " (expected " << expected << ")\n";
    return solves == expected ? kOk : kMismatch;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tucker tensor train Taylor series surrogates"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("config", config_path, "config file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
    auto* threads_opt = run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    auto* out_opt = run->add_option("--out", out_dir, "output directory");

    auto* verify = app.add_subcommand("verify-tables", "check solve and term counts against the reference table");
    int verify_orders = t4s::kTableOrders;
    verify->add_option("--orders", verify_orders, "orders to check")->check(CLI::Range(1, t4s::kTableOrders));

    int order = 1;
    std::string mode = "fwd";
    t4s::Index dim = 8;
    std::uint64_t probe_seed = 0;
    bool asym = false;
    auto* probe = app.add_subcommand("probe", "ad-hoc derivative probe of the built-in map");
    probe->add_option("--order", order, "derivative order")->required()->check(CLI::Range(1, 10));
    probe->add_option("--mode", mode, "fwd or rev")->required()->check(CLI::IsMember({"fwd", "rev"}));
    probe->add_option("--dim", dim, "parameter dimension")->check(CLI::Range(1, 50));
    probe->add_option("--seed", probe_seed, "map seed");
    probe->add_flag("--asym", asym, "distinct directions instead of a repeated one");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) {
            t4s::ExperimentConfig cfg = t4s::load_config(config_path);
            if (*seed_opt) cfg.seed = seed;
            if (*threads_opt) cfg.threads = threads;
            if (*out_opt) cfg.out_dir = out_dir;
            t4s::validate(cfg);
            return t4s::run_experiment(cfg, std::cout);
        }
        if (*verify) {
            auto rep = t4s::run_deriv_verify(verify_orders);
            t4s::print_count_table(std::cout, rep);
            std::cout << (rep.ok() ? "tables match\n" : "tables MISMATCH\n");
            return rep.ok() ? kOk : kMismatch;
        }
        if (*probe) return probe_command(order, mode, dim, probe_seed, asym);
    } catch (const t4s::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kOk;
}
