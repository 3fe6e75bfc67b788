#include "t4s/training_data.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>

namespace t4s {

std::vector<ProbeSample> generate_training_data(const ImplicitMap& reduced, int k, Index n_samples,
                                                std::uint64_t seed) {
    require(k >= 1, "max order must be positive");
    const Index N = reduced.theta_dim(), M = reduced.output_dim();
    BasePoint base = make_base_point(reduced, Vector::Zero(N));
    Rng master(seed);
    std::vector<ProbeSample> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    for (Index i = 0; i < n_samples; ++i) {
        ProbeSample s;
        s.seed = master.next();
        Rng rng(s.seed);
        s.x = rng.normal(N);
        s.x /= s.x.norm();
        s.omega = rng.normal(M);
        s.omega /= s.omega.norm();
        ProbeSession session(reduced, base, {s.x});
        for (int j = 1; j <= k; ++j) {
            s.y.push_back(session.forward(ms_add(0, 0, j)));
            s.psi.push_back(session.reverse(ms_add(0, 0, j - 1), s.omega));
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<ProbeSample> generate_training_data(std::shared_ptr<const ImplicitMap> map, const Matrix& c,
                                                const Vector& theta0, int k, Index n_samples, std::uint64_t seed) {
    const Index m = map->output_dim();
    ReducedImplicitMap reduced(std::move(map), theta0, c, Matrix::Identity(m, m));
    return generate_training_data(reduced, k, n_samples, seed);
}

namespace {

std::vector<double> as_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }
Vector as_eigen(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())); }

}  // namespace

void write_samples_jsonl(std::ostream& os, const std::vector<ProbeSample>& samples) {
    for (const auto& s : samples) {
        nlohmann::json j;
        j["seed"] = s.seed;
        j["order"] = s.max_order();
        j["x"] = as_vec(s.x);
        j["omega"] = as_vec(s.omega);
        j["psi"] = nlohmann::json::array();
        j["y"] = nlohmann::json::array();
        for (const auto& v : s.psi) j["psi"].push_back(as_vec(v));
        for (const auto& v : s.y) j["y"].push_back(as_vec(v));
        os << j.dump() << '\n';
    }
}

std::vector<ProbeSample> read_samples_jsonl(std::istream& is) {
    std::vector<ProbeSample> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        ProbeSample s;
        s.seed = j.at("seed").get<std::uint64_t>();
        s.x = as_eigen(j.at("x").get<std::vector<double>>());
        s.omega = as_eigen(j.at("omega").get<std::vector<double>>());
        for (const auto& v : j.at("psi")) s.psi.push_back(as_eigen(v.get<std::vector<double>>()));
        for (const auto& v : j.at("y")) s.y.push_back(as_eigen(v.get<std::vector<double>>()));
        require(static_cast<int>(s.y.size()) == j.at("order").get<int>(), "order field disagrees with probe count");
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace t4s
