#include "t4s/model.hpp"

#include "t4s/sweep.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace t4s {

namespace {

constexpr char kMagic[4] = {'T', '4', 'S', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_i64(std::ostream& os, std::int64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }
std::int64_t get_i64(std::istream& is) {
    std::int64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw std::runtime_error("truncated model file");
    return v;
}

void put_matrix(std::ostream& os, const Matrix& m) {
    put_i64(os, m.rows());
    put_i64(os, m.cols());
    RowMatrix rm = m;
    os.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()));
}

Matrix get_matrix(std::istream& is) {
    auto r = get_i64(is), c = get_i64(is);
    if (r < 0 || c < 0 || (r > 0 && c > dense_element_limit() / std::max<std::int64_t>(r, 1)))
        throw std::runtime_error("bad matrix header in model file");
    RowMatrix rm(r, c);
    is.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()));
    if (!is) throw std::runtime_error("truncated model file");
    return rm;
}

double factorial(int j) {
    double f = 1.0;
    for (int i = 2; i <= j; ++i) f *= i;
    return f;
}

}  // namespace

Index T4SModel::input_dim() const { return terms.empty() ? 0 : terms[0].shape()[0]; }

void T4SModel::validate() const {
    for (std::size_t j = 0; j < terms.size(); ++j) {
        terms[j].validate();
        auto shape = terms[j].shape();
        require(static_cast<std::size_t>(terms[j].order()) == j + 2, "model term orders must be 1..k without gaps");
        require(shape.back() == f0.size(), "model term output dimension disagrees with f0");
        for (std::size_t i = 0; i + 1 < shape.size(); ++i)
            require(shape[i] == input_dim(), "model term input dimensions disagree");
    }
}

Vector evaluate(const T4SModel& model, const Vector& x, int up_to) {
    require(up_to >= 0 && up_to <= model.max_order(), "evaluation order exceeds the model order");
    Vector out = model.f0;
    for (int j = 1; j <= up_to; ++j) {
        const auto& t = model.terms[static_cast<std::size_t>(j - 1)];
        require(x.size() == t.shape()[0], "input dimension mismatch");
        std::vector<Vector> w(static_cast<std::size_t>(j), x);
        w.push_back(Vector::Ones(out.size()));
        out += probe_t3(t, w).z.back() / factorial(j);
    }
    return out;
}

Vector evaluate(const T4SModel& model, const Vector& x) { return evaluate(model, x, model.max_order()); }

T4SModel lift_to_original(const T4SModel& model, const Matrix& u, const Matrix& v) {
    T4SModel out = model;
    require(v.cols() == model.f0.size(), "output basis columns must match the model output");
    out.f0 = v * model.f0;
    for (auto& t : out.terms) {
        const std::size_t d = t.bases.size();
        for (std::size_t i = 0; i + 1 < d; ++i) {
            require(u.cols() == t.bases[i].rows(), "input basis columns must match the model input");
            t.bases[i] = u * t.bases[i];
        }
        t.bases[d - 1] = v * t.bases[d - 1];
    }
    out.U = u;
    out.V = v;
    return out;
}

void write_model(std::ostream& os, const T4SModel& model) {
    model.validate();
    os.write(kMagic, 4);
    os.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
    put_matrix(os, model.f0);
    put_i64(os, static_cast<std::int64_t>(model.terms.size()));
    for (const auto& t : model.terms) write_t3(os, t);
    put_matrix(os, model.U);
    put_matrix(os, model.V);
    put_matrix(os, model.C);
    put_matrix(os, model.theta0);
    put_i64(os, static_cast<std::int64_t>(model.meta.size()));
    os.write(model.meta.data(), static_cast<std::streamsize>(model.meta.size()));
    if (!os) throw std::runtime_error("failed to write model");
}

T4SModel read_model(std::istream& is) {
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a T4S model file");
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof version);
    if (!is || version != kVersion) throw std::runtime_error("unsupported model file version");
    T4SModel m;
    Matrix f0 = get_matrix(is);
    m.f0 = Eigen::Map<const Vector>(f0.data(), f0.size());
    auto k = get_i64(is);
    if (k < 0 || k > 64) throw std::runtime_error("bad term count in model file");
    for (std::int64_t j = 0; j < k; ++j) m.terms.push_back(read_t3(is));
    m.U = get_matrix(is);
    m.V = get_matrix(is);
    m.C = get_matrix(is);
    Matrix th = get_matrix(is);
    m.theta0 = Eigen::Map<const Vector>(th.data(), th.size());
    auto len = get_i64(is);
    if (len < 0 || len > (std::int64_t{1} << 32)) throw std::runtime_error("bad metadata length in model file");
    m.meta.resize(static_cast<std::size_t>(len));
    is.read(m.meta.data(), len);
    if (!is) throw std::runtime_error("truncated model file");
    m.validate();
    return m;
}

void save_model(const T4SModel& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_model(os, model);
}

T4SModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_model(is);
}

}  // namespace t4s
