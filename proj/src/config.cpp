#include "t4s/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace t4s {

namespace {

std::string unquote(std::string v) {
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) return v.substr(1, v.size() - 2);
    return v;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("bad value for " + key + ": '" + v + "'");
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <class T, class F>
Setter num(F field) {
    return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = parse_number<T>(k, v); };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"scenario",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             if (v == "random-tensor") c.scenario = Scenario::RandomTensor;
             else if (v == "implicit-map") c.scenario = Scenario::ImplicitMap;
             else if (v == "deriv-verify") c.scenario = Scenario::DerivVerify;
             else throw ConfigError("bad value for " + k + ": '" + v + "'");
         }},
        {"k", num<int>(&ExperimentConfig::k)},
        {"N", num<Index>(&ExperimentConfig::N)},
        {"M", num<Index>(&ExperimentConfig::M)},
        {"power", num<double>(&ExperimentConfig::power)},
        {"sigma", num<double>(&ExperimentConfig::sigma)},
        {"n_s", num<Index>(&ExperimentConfig::n_s)},
        {"n_t", num<Index>(&ExperimentConfig::n_t)},
        {"optimizer",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             if (v == "tr-rmgn") c.optimizer = Optimizer::TrRmgn;
             else if (v == "mc-sgd") c.optimizer = Optimizer::McSgd;
             else throw ConfigError("bad value for " + k + ": '" + v + "'");
         }},
        {"n_chunk", num<Index>(&ExperimentConfig::n_chunk)},
        {"ratio_cap", num<double>(&ExperimentConfig::ratio_cap)},
        {"tau", num<double>(&ExperimentConfig::tau)},
        {"max_stages", num<int>(&ExperimentConfig::max_stages)},
        {"max_iter", num<int>(&ExperimentConfig::max_iter)},
        {"sgd_max_iter", num<int>(&ExperimentConfig::sgd_max_iter)},
        {"time_limit", num<double>(&ExperimentConfig::time_limit)},
        {"validation", num<double>(&ExperimentConfig::validation)},
        {"sketch_eps", num<double>(&ExperimentConfig::sketch_eps)},
        {"sketch_patience", num<int>(&ExperimentConfig::sketch_patience)},
        {"seed", num<std::uint64_t>(&ExperimentConfig::seed)},
        {"out", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
        {"threads", num<int>(&ExperimentConfig::threads)},
    };
    return table;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    // section prefixes are accepted and ignored: [fit] tau = 10 -> tau
    std::string k = key.substr(key.find_last_of('.') == std::string::npos ? 0 : key.find_last_of('.') + 1);
    auto it = setters().find(k);
    if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(cfg, k, unquote(value));
}

void validate(const ExperimentConfig& c) {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    need(c.k >= 0 && c.k <= 10, "k must lie in [0, 10]");
    need(c.k >= 1 || c.scenario == Scenario::ImplicitMap, "k must be positive for this scenario");
    need(c.N > 0 && c.M > 0, "N and M must be positive");
    need(c.n_s > 0 && c.n_t > 0, "n_s and n_t must be positive");
    need(c.n_chunk > 0, "n_chunk must be positive");
    need(c.tau > 0.0, "tau must be positive");
    need(c.max_stages > 0 && c.max_iter > 0 && c.sgd_max_iter > 0, "iteration limits must be positive");
    need(c.validation > 0.0 && c.validation < 1.0, "validation must lie in (0,1)");
    need(c.sketch_eps > 0.0 && c.sketch_eps < 1.0, "sketch_eps must lie in (0,1)");
    need(c.sketch_patience > 0, "sketch_patience must be positive");
    need(c.threads > 0, "threads must be positive");
    need(c.time_limit >= 0.0, "time_limit must be non-negative");
    need(c.sigma > 0.0, "sigma must be positive");
    if (c.scenario == Scenario::ImplicitMap) need(c.N <= 50 && c.M <= 50, "built-in map dimensions are capped at 50");
}

ExperimentConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    ExperimentConfig cfg;
    for (const auto& [key, node] : tree) {
        if (node.empty()) {
            apply_setting(cfg, key, node.data());
        } else {
            for (const auto& [sub, leaf] : node) apply_setting(cfg, key + "." + sub, leaf.data());
        }
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::RandomTensor: return "random-tensor";
        case Scenario::ImplicitMap: return "implicit-map";
        case Scenario::DerivVerify: return "deriv-verify";
    }
    return "?";
}

std::string to_string(Optimizer o) { return o == Optimizer::TrRmgn ? "tr-rmgn" : "mc-sgd"; }

std::string ExperimentConfig::canonical() const {
    std::ostringstream os;
    os << std::setprecision(17);
    // keys in sorted order
    os << "M=" << M << '\n'
       << "N=" << N << '\n'
       << "k=" << k << '\n'
       << "max_iter=" << max_iter << '\n'
       << "max_stages=" << max_stages << '\n'
       << "n_chunk=" << n_chunk << '\n'
       << "n_s=" << n_s << '\n'
       << "n_t=" << n_t << '\n'
       << "optimizer=" << to_string(optimizer) << '\n'
       << "power=" << power << '\n'
       << "ratio_cap=" << ratio_cap << '\n'
       << "scenario=" << to_string(scenario) << '\n'
       << "seed=" << seed << '\n'
       << "sgd_max_iter=" << sgd_max_iter << '\n'
       << "sigma=" << sigma << '\n'
       << "sketch_eps=" << sketch_eps << '\n'
       << "sketch_patience=" << sketch_patience << '\n'
       << "tau=" << tau << '\n'
       << "time_limit=" << time_limit << '\n'
       << "validation=" << validation << '\n';
    return os.str();
}

std::string ExperimentConfig::hash() const {
    // FNV-1a, stable across platforms
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : canonical()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace t4s
