#include "t4s/t3.hpp"
#include "t4s/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace t4s {

// ---------------------------------------------------------------------------
// Core3
// ---------------------------------------------------------------------------

Matrix Core3::outer_unfolding() const {
    Matrix o(left * right, mid);
    for (Index a = 0; a < left; ++a)
        for (Index b = 0; b < mid; ++b)
            for (Index c = 0; c < right; ++c) o(a * right + c, b) = (*this)(a, b, c);
    return o;
}

Core3 Core3::from_left(const Matrix& m, Index l, Index mid, Index r) {
    require(m.rows() == l * mid && m.cols() == r, "left unfolding shape mismatch");
    Core3 g(l, mid, r);
    g.left_unfolding() = m;
    return g;
}

Core3 Core3::from_right(const Matrix& m, Index l, Index mid, Index r) {
    require(m.rows() == l && m.cols() == mid * r, "right unfolding shape mismatch");
    Core3 g(l, mid, r);
    g.right_unfolding() = m;
    return g;
}

Core3 Core3::from_outer(const Matrix& m, Index l, Index mid, Index r) {
    require(m.rows() == l * r && m.cols() == mid, "outer unfolding shape mismatch");
    Core3 g(l, mid, r);
    for (Index a = 0; a < l; ++a)
        for (Index b = 0; b < mid; ++b)
            for (Index c = 0; c < r; ++c) g(a, b, c) = m(a * r + c, b);
    return g;
}

Core3 Core3::random(Index l, Index m, Index r, Rng& rng) {
    Core3 g(l, m, r);
    for (double& x : g.data) x = rng.normal();
    return g;
}

Matrix Core3::apply_mid(const Vector& x) const {
    require(x.size() == mid, "core middle dimension mismatch");
    Matrix out(left, right);
    for (Index a = 0; a < left; ++a) {
        Eigen::Map<const RowMatrix> blk(data.data() + a * mid * right, mid, right);
        out.row(a).noalias() = x.transpose() * blk;
    }
    return out;
}

Core3 Core3::mid_product(const Matrix& m) const {
    require(m.cols() == mid, "core middle dimension mismatch");
    Core3 g(left, m.rows(), right);
    for (Index a = 0; a < left; ++a) {
        Eigen::Map<const RowMatrix> in(data.data() + a * mid * right, mid, right);
        Eigen::Map<RowMatrix> out(g.data.data() + a * g.mid * right, g.mid, right);
        out.noalias() = m * in;
    }
    return g;
}

double Core3::squared_norm() const {
    double s = 0;
    for (double x : data) s += x * x;
    return s;
}

Core3& Core3::operator+=(const Core3& o) {
    require(left == o.left && mid == o.mid && right == o.right, "core shape mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
}

Core3& Core3::operator*=(double a) {
    for (double& x : data) x *= a;
    return *this;
}

Core3 operator+(Core3 a, const Core3& b) { return a += b; }

double core_inner(const Core3& a, const Core3& b) {
    require(a.data.size() == b.data.size(), "core shape mismatch");
    double s = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

// ---------------------------------------------------------------------------
// Trains
// ---------------------------------------------------------------------------

std::vector<Index> TensorTrain::extents() const {
    std::vector<Index> e;
    for (const auto& g : cores) e.push_back(g.mid);
    return e;
}

std::vector<Index> TensorTrain::ranks() const {
    std::vector<Index> r;
    if (cores.empty()) return {1};
    r.push_back(cores.front().left);
    for (const auto& g : cores) r.push_back(g.right);
    return r;
}

void TensorTrain::validate() const {
    require(!cores.empty(), "tensor train needs at least one core");
    require(cores.front().left == 1 && cores.back().right == 1, "boundary ranks must be 1");
    for (std::size_t i = 0; i + 1 < cores.size(); ++i)
        require(cores[i].right == cores[i + 1].left, "adjacent TT ranks disagree");
    for (const auto& g : cores)
        require(static_cast<Index>(g.data.size()) == g.left * g.mid * g.right, "core data size mismatch");
}

TensorTrain TensorTrain::random(const std::vector<Index>& extents, const std::vector<Index>& ranks, Rng& rng) {
    require(ranks.size() == extents.size() + 1, "rank vector must have d+1 entries");
    TensorTrain tt;
    for (std::size_t i = 0; i < extents.size(); ++i)
        tt.cores.push_back(Core3::random(ranks[i], extents[i], ranks[i + 1], rng));
    tt.validate();
    return tt;
}

std::vector<Index> TuckerTensorTrain::shape() const {
    std::vector<Index> s;
    for (const auto& u : bases) s.push_back(u.rows());
    return s;
}

void TuckerTensorTrain::validate() const {
    tt.validate();
    require(bases.size() == tt.cores.size(), "one basis per core required");
    for (std::size_t i = 0; i < bases.size(); ++i)
        require(bases[i].cols() == tt.cores[i].mid, "basis/core middle extent mismatch");
}

TuckerTensorTrain TuckerTensorTrain::random(const std::vector<Index>& shape, const std::vector<Index>& tucker,
                                            const std::vector<Index>& tt_ranks, Rng& rng) {
    require(shape.size() == tucker.size(), "shape/Tucker rank arity mismatch");
    TuckerTensorTrain t;
    for (std::size_t i = 0; i < shape.size(); ++i) t.bases.push_back(rng.normal(shape[i], tucker[i]));
    t.tt = TensorTrain::random(tucker, tt_ranks, rng);
    t.validate();
    return t;
}

TuckerTensorTrain TuckerTensorTrain::from_tt(const TensorTrain& tt) {
    TuckerTensorTrain t;
    t.tt = tt;
    for (const auto& g : tt.cores) t.bases.push_back(Matrix::Identity(g.mid, g.mid));
    return t;
}

namespace {

// X holds a (P x mid x r) row-major block; apply u on the middle index.
std::vector<double> apply_middle(const std::vector<double>& x, Index p, Index mid, Index r, const Matrix& u) {
    std::vector<double> out(static_cast<std::size_t>(p * u.rows() * r));
    for (Index a = 0; a < p; ++a) {
        Eigen::Map<const RowMatrix> in(x.data() + a * mid * r, mid, r);
        Eigen::Map<RowMatrix> o(out.data() + a * u.rows() * r, u.rows(), r);
        o.noalias() = u * in;
    }
    return out;
}

DenseTensor contract_impl(const TensorTrain& tt, const std::vector<Matrix>* bases) {
    tt.validate();
    std::vector<Index> shape;
    for (Index i = 0; i < tt.order(); ++i)
        shape.push_back(bases ? (*bases)[static_cast<std::size_t>(i)].rows() : tt.cores[static_cast<std::size_t>(i)].mid);
    checked_product(shape);
    std::vector<double> x{1.0};
    Index p = 1;
    for (Index i = 0; i < tt.order(); ++i) {
        const Core3& g = tt.cores[static_cast<std::size_t>(i)];
        Eigen::Map<const RowMatrix> xm(x.data(), p, g.left);
        RowMatrix y = xm * g.right_unfolding();
        std::vector<double> next(y.data(), y.data() + y.size());
        if (bases) next = apply_middle(next, p, g.mid, g.right, (*bases)[static_cast<std::size_t>(i)]);
        p *= shape[static_cast<std::size_t>(i)];
        x = std::move(next);
    }
    return DenseTensor(shape, std::move(x));
}

}  // namespace

DenseTensor contract_tt(const TensorTrain& tt) { return contract_impl(tt, nullptr); }

DenseTensor contract_full(const TuckerTensorTrain& t) {
    t.validate();
    return contract_impl(t.tt, &t.bases);
}

TensorTrain left_orthogonalize(const TensorTrain& tt) {
    tt.validate();
    TensorTrain out = tt;
    for (std::size_t i = 0; i + 1 < out.cores.size(); ++i) {
        Core3& g = out.cores[i];
        ThinQR qr = thin_qr(g.left_unfolding());
        const Index k = qr.q.cols();
        Core3& h = out.cores[i + 1];
        Matrix next = qr.r * h.right_unfolding();
        Core3 ng = Core3::from_left(qr.q, g.left, g.mid, k);
        Core3 nh = Core3::from_right(next, k, h.mid, h.right);
        g = std::move(ng);
        h = std::move(nh);
    }
    return out;
}

TensorTrain right_orthogonalize(const TensorTrain& tt) {
    tt.validate();
    TensorTrain out = tt;
    for (std::size_t i = out.cores.size(); i-- > 1;) {
        Core3& g = out.cores[i];
        ThinQR qr = thin_qr(g.right_unfolding().transpose());
        const Index k = qr.q.cols();
        Core3& h = out.cores[i - 1];
        Matrix prev = h.left_unfolding() * qr.r.transpose();
        Core3 ng = Core3::from_right(qr.q.transpose(), k, g.mid, g.right);
        Core3 nh = Core3::from_left(prev, h.left, h.mid, k);
        g = std::move(ng);
        h = std::move(nh);
    }
    return out;
}

TuckerTensorTrain orthogonalize_bases(const TuckerTensorTrain& t) {
    t.validate();
    TuckerTensorTrain out = t;
    for (std::size_t i = 0; i < out.bases.size(); ++i) {
        ThinQR qr = thin_qr(out.bases[i]);
        out.bases[i] = qr.q;
        out.tt.cores[i] = out.tt.cores[i].mid_product(qr.r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// T3-SVD
// ---------------------------------------------------------------------------

namespace {

Index cap_at(const std::vector<Index>& caps, std::size_t i) {
    if (caps.empty()) return std::numeric_limits<Index>::max();
    require(i < caps.size(), "truncation rank vector too short");
    return caps[i];
}

Index choose_rank(const Vector& s, const Truncation& trunc, Index cap) {
    const Index avail = s.size();
    if (avail == 0) return 0;
    if (trunc.exact_ranks) return std::max<Index>(1, std::min(cap, avail));
    const double smax = s[0];
    Index k = 0;
    while (k < avail && s[k] > kSingularFloor * smax) ++k;
    if (trunc.rel_tol > 0) {
        const double total = s.squaredNorm();
        double tail = total;
        Index kt = 0;
        while (kt < avail && tail > trunc.rel_tol * trunc.rel_tol * total) {
            tail -= s[kt] * s[kt];
            ++kt;
        }
        k = std::min(k, kt);
    }
    k = std::min(k, cap);
    return std::max<Index>(1, std::min(k, avail));
}

}  // namespace

T3WithSpectrum t3_svd_dense(const DenseTensor& t, const Truncation& trunc) {
    const Index d = t.order();
    require(d >= 1, "tensor must have at least one index");
    T3WithSpectrum res;
    std::vector<double> x = t.data();
    Index rprev = 1;
    for (Index i = 0; i < d; ++i) {
        const Index n = t.extent(i);
        const Index rest = static_cast<Index>(x.size()) / (rprev * n);
        // matricization: n x (rprev*rest)
        Matrix m(n, rprev * rest);
        for (Index a = 0; a < rprev; ++a)
            for (Index b = 0; b < n; ++b)
                for (Index q = 0; q < rest; ++q) m(b, a * rest + q) = x[static_cast<std::size_t>((a * n + b) * rest + q)];
        ThinSVD svd = thin_svd(m);
        res.spectrum.tucker.push_back(svd.s);
        const Index k = choose_rank(svd.s, trunc, cap_at(trunc.max_tucker, static_cast<std::size_t>(i)));
        res.t3.bases.push_back(svd.u.leftCols(k));
        Matrix sv = svd.s.head(k).asDiagonal() * svd.v.leftCols(k).transpose();  // k x (rprev*rest)
        std::vector<double> y(static_cast<std::size_t>(rprev * k * rest));
        for (Index a = 0; a < rprev; ++a)
            for (Index b = 0; b < k; ++b)
                for (Index q = 0; q < rest; ++q) y[static_cast<std::size_t>((a * k + b) * rest + q)] = sv(b, a * rest + q);
        if (i + 1 < d) {
            Eigen::Map<const RowMatrix> lm(y.data(), rprev * k, rest);
            ThinSVD s2 = thin_svd(lm);
            res.spectrum.tt.push_back(s2.s);
            const Index r = choose_rank(s2.s, trunc, cap_at(trunc.max_tt, static_cast<std::size_t>(i + 1)));
            res.t3.tt.cores.push_back(Core3::from_left(s2.u.leftCols(r), rprev, k, r));
            RowMatrix carry = s2.s.head(r).asDiagonal() * s2.v.leftCols(r).transpose();
            x.assign(carry.data(), carry.data() + carry.size());
            rprev = r;
        } else {
            Core3 g(rprev, k, 1);
            g.data = y;
            res.t3.tt.cores.push_back(std::move(g));
        }
    }
    res.t3.validate();
    return res;
}

T3WithSpectrum t3_svd_implicit(const TuckerTensorTrain& t, const Truncation& trunc) {
    TuckerTensorTrain w = orthogonalize_bases(t);
    w.tt = right_orthogonalize(w.tt);
    T3WithSpectrum res;
    const std::size_t d = w.bases.size();
    for (std::size_t i = 0; i < d; ++i) {
        Core3& g = w.tt.cores[i];
        ThinSVD so = thin_svd(g.outer_unfolding());
        res.spectrum.tucker.push_back(so.s);
        const Index k = choose_rank(so.s, trunc, cap_at(trunc.max_tucker, i));
        Matrix ws = so.u.leftCols(k) * so.s.head(k).asDiagonal();
        w.bases[i] = w.bases[i] * so.v.leftCols(k);
        g = Core3::from_outer(ws, g.left, k, g.right);
        if (i + 1 < d) {
            ThinSVD sl = thin_svd(g.left_unfolding());
            res.spectrum.tt.push_back(sl.s);
            const Index r = choose_rank(sl.s, trunc, cap_at(trunc.max_tt, i + 1));
            Core3& h = w.tt.cores[i + 1];
            Matrix carry = sl.s.head(r).asDiagonal() * sl.v.leftCols(r).transpose();
            Core3 nh = Core3::from_right(carry * h.right_unfolding(), r, h.mid, h.right);
            g = Core3::from_left(sl.u.leftCols(r), g.left, g.mid, r);
            h = std::move(nh);
        }
    }
    res.t3 = std::move(w);
    res.t3.validate();
    return res;
}

// ---------------------------------------------------------------------------
// Symmetric trains, padding, rank bookkeeping
// ---------------------------------------------------------------------------

TuckerTensorTrain sym_tt_to_t3(const TensorTrain& s, Index k) {
    s.validate();
    require(k >= 1 && s.order() == k + 1, "expected k input cores plus one output core");
    for (Index i = 1; i < k; ++i)
        require(s.cores[static_cast<std::size_t>(i)].mid == s.cores[0].mid, "input extents must agree");
    const Core3& g1 = s.cores.front();
    const Core3& gl = s.cores.back();
    Matrix first = Eigen::Map<const RowMatrix>(g1.data.data(), g1.mid, g1.right);
    Matrix last = Eigen::Map<const RowMatrix>(gl.data.data(), gl.left, gl.mid);
    Matrix u = orthonormal_columns(first);
    Matrix v = orthonormal_columns(last.transpose());
    TuckerTensorTrain out;
    for (Index i = 0; i < s.order(); ++i) {
        const Matrix& b = i < k ? u : v;
        out.bases.push_back(b);
        out.tt.cores.push_back(s.cores[static_cast<std::size_t>(i)].mid_product(b.transpose()));
    }
    out.validate();
    return out;
}

double measured_asymmetry(const TensorTrain& s, Index k) {
    DenseTensor t = contract_tt(s);
    const double nt = hs_norm(t);
    if (nt == 0) return 0;
    double worst = 0;
    for (Index i = 0; i + 1 < k; ++i) {
        std::vector<Index> perm(static_cast<std::size_t>(t.order()));
        for (std::size_t j = 0; j < perm.size(); ++j) perm[j] = static_cast<Index>(j);
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(i + 1)]);
        worst = std::max(worst, hs_norm(t - permute(t, perm)) / nt);
    }
    return worst;
}

TuckerTensorTrain zero_pad_ranks(const TuckerTensorTrain& t, const std::vector<Index>& n,
                                 const std::vector<Index>& r) {
    t.validate();
    const auto on = t.tucker_ranks();
    const auto orr = t.tt_ranks();
    require(n.size() == on.size() && r.size() == orr.size(), "rank vector arity mismatch");
    require(r.front() == 1 && r.back() == 1, "boundary ranks must be 1");
    for (std::size_t i = 0; i < n.size(); ++i) require(n[i] >= on[i], "new Tucker ranks smaller than old");
    for (std::size_t i = 0; i < r.size(); ++i) require(r[i] >= orr[i], "new TT ranks smaller than old");
    TuckerTensorTrain out;
    for (std::size_t i = 0; i < n.size(); ++i) {
        Matrix u = Matrix::Zero(t.bases[i].rows(), n[i]);
        u.leftCols(on[i]) = t.bases[i];
        out.bases.push_back(u);
        const Core3& g = t.tt.cores[i];
        Core3 h(r[i], n[i], r[i + 1]);
        for (Index a = 0; a < g.left; ++a)
            for (Index b = 0; b < g.mid; ++b)
                for (Index c = 0; c < g.right; ++c) h(a, b, c) = g(a, b, c);
        out.tt.cores.push_back(std::move(h));
    }
    return out;
}

RankPair remove_useless_ranks(const std::vector<Index>& n_in, const std::vector<Index>& r_in,
                              const std::vector<Index>& dims) {
    const std::size_t d = dims.size();
    require(n_in.size() == d && r_in.size() == d + 1, "rank vector arity mismatch");
    RankPair out{n_in, r_in};
    auto& n = out.n;
    auto& r = out.r;
    r.front() = 1;
    r.back() = 1;
    for (auto& x : n) x = std::max<Index>(x, 1);
    for (auto& x : r) x = std::max<Index>(x, 1);
    for (std::size_t i = 0; i < d; ++i) n[i] = std::min(n[i], dims[i]);
    for (std::size_t i = d; i-- > 1;) r[i] = std::min(r[i], n[i] * r[i + 1]);
    for (std::size_t i = 0; i < d; ++i) {
        n[i] = std::min(n[i], r[i] * r[i + 1]);
        if (i + 1 < d) r[i + 1] = std::min(r[i + 1], r[i] * n[i]);
    }
    return out;
}

double t3_norm(const TuckerTensorTrain& t) {
    TuckerTensorTrain w = orthogonalize_bases(t);
    TensorTrain tt = right_orthogonalize(w.tt);
    return std::sqrt(tt.cores.front().squared_norm());
}

TuckerTensorTrain scaled(TuckerTensorTrain t, double a) {
    t.tt.cores.back() *= a;
    return t;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'T', '3', 'T', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("truncated T3 stream");
    return v;
}

}  // namespace

void write_t3(std::ostream& os, const TuckerTensorTrain& t) {
    t.validate();
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kVersion);
    put<std::int64_t>(os, t.order());
    for (const auto& u : t.bases) put<std::int64_t>(os, u.rows());
    for (const auto& u : t.bases) put<std::int64_t>(os, u.cols());
    for (Index r : t.tt_ranks()) put<std::int64_t>(os, r);
    for (const auto& u : t.bases) {
        RowMatrix rm = u;
        os.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    }
    for (const auto& g : t.tt.cores)
        os.write(reinterpret_cast<const char*>(g.data.data()), static_cast<std::streamsize>(g.data.size() * sizeof(double)));
}

TuckerTensorTrain read_t3(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("bad T3 magic");
    if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("unsupported T3 version");
    const auto d = get<std::int64_t>(is);
    if (d < 1 || d > 64) throw std::runtime_error("bad T3 order");
    std::vector<Index> shape(static_cast<std::size_t>(d)), n(static_cast<std::size_t>(d)), r(static_cast<std::size_t>(d + 1));
    for (auto& x : shape) x = get<std::int64_t>(is);
    for (auto& x : n) x = get<std::int64_t>(is);
    for (auto& x : r) x = get<std::int64_t>(is);
    TuckerTensorTrain t;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        RowMatrix rm(shape[i], n[i]);
        is.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
        t.bases.emplace_back(rm);
    }
    for (std::size_t i = 0; i < n.size(); ++i) {
        Core3 g(r[i], n[i], r[i + 1]);
        is.read(reinterpret_cast<char*>(g.data.data()), static_cast<std::streamsize>(g.data.size() * sizeof(double)));
        t.tt.cores.push_back(std::move(g));
    }
    if (!is) throw std::runtime_error("truncated T3 stream");
    t.validate();
    return t;
}

std::string t3_to_json(const TuckerTensorTrain& t) {
    t.validate();
    nlohmann::json j;
    j["format"] = "t3";
    j["version"] = kVersion;
    j["shape"] = t.shape();
    j["tucker_ranks"] = t.tucker_ranks();
    j["tt_ranks"] = t.tt_ranks();
    j["bases"] = nlohmann::json::array();
    for (const auto& u : t.bases) {
        RowMatrix rm = u;
        j["bases"].push_back(std::vector<double>(rm.data(), rm.data() + rm.size()));
    }
    j["cores"] = nlohmann::json::array();
    for (const auto& g : t.tt.cores) j["cores"].push_back(g.data);
    return j.dump();
}

TuckerTensorTrain t3_from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    if (j.at("format") != "t3" || j.at("version").get<std::uint32_t>() != kVersion)
        throw std::runtime_error("not a T3 JSON document");
    auto shape = j.at("shape").get<std::vector<Index>>();
    auto n = j.at("tucker_ranks").get<std::vector<Index>>();
    auto r = j.at("tt_ranks").get<std::vector<Index>>();
    require(n.size() == shape.size() && r.size() == shape.size() + 1, "rank vector arity mismatch");
    TuckerTensorTrain t;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        auto flat = j.at("bases").at(i).get<std::vector<double>>();
        require(static_cast<Index>(flat.size()) == shape[i] * n[i], "basis size mismatch");
        t.bases.emplace_back(Eigen::Map<const RowMatrix>(flat.data(), shape[i], n[i]));
        Core3 g(r[i], n[i], r[i + 1]);
        g.data = j.at("cores").at(i).get<std::vector<double>>();
        t.tt.cores.push_back(std::move(g));
    }
    t.validate();
    return t;
}

}  // namespace t4s
