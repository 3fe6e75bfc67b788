#include "t4s/manifold.hpp"
#include "t4s/linalg.hpp"

#include <atomic>
#include <cmath>

namespace t4s {

namespace {

std::atomic<std::uint64_t> g_next_id{1};

void check_base(const ManifoldPoint& p, const GaugedVariation& v) {
    if (v.base_id != p.id) throw std::invalid_argument("variation belongs to a different base point");
}

}  // namespace

TuckerTensorTrain ManifoldPoint::as_t3() const {
    TuckerTensorTrain t;
    t.bases = U;
    t.tt.cores = P;
    return t;
}

ManifoldPoint prepare_point(const TuckerTensorTrain& t) {
    t.validate();
    const auto d = static_cast<std::size_t>(t.order());
    ManifoldPoint p;
    p.dims = t.shape();
    p.n = t.tucker_ranks();
    p.r = t.tt_ranks();
    RankPair reduced = remove_useless_ranks(p.n, p.r, p.dims);
    if (reduced.n != p.n || reduced.r != p.r)
        throw DegeneratePoint("ranks admit no non-degenerate T3; reduce them first", reduced);

    TuckerTensorTrain w = orthogonalize_bases(t);
    w.tt = right_orthogonalize(w.tt);
    if (w.tucker_ranks() != p.n || w.tt_ranks() != p.r)
        throw DegeneratePoint("orthogonalization changed ranks", reduced);
    p.U = w.bases;
    p.Q = w.tt.cores;
    p.P.resize(d);
    p.Gt.resize(d);
    Core3 cur = p.Q[0];
    for (std::size_t i = 0; i < d; ++i) {
        p.Gt[i] = cur;
        if (i + 1 < d) {
            ThinQR qr = thin_qr(cur.left_unfolding());
            p.P[i] = Core3::from_left(qr.q, cur.left, cur.mid, cur.right);
            const Core3& q = p.Q[i + 1];
            cur = Core3::from_right(qr.r * q.right_unfolding(), q.left, q.mid, q.right);
        } else {
            p.P[i] = cur;
        }
    }
    p.O.resize(d);
    p.Ut.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const Core3& g = p.Gt[i];
        ThinQR qr = thin_qr(g.outer_unfolding());
        p.O[i] = Core3::from_outer(qr.q, g.left, g.mid, g.right);
        p.Ut[i] = p.U[i] * qr.r.transpose();
    }
    p.id = g_next_id.fetch_add(1);
    return p;
}

TuckerTensorTrain perturb(const TuckerTensorTrain& t, double scale, std::uint64_t seed) {
    Rng rng(seed);
    TuckerTensorTrain out = t;
    const double nt = t3_norm(t);
    const double s = scale * (nt > 0 ? nt : 1.0);
    for (auto& u : out.bases) u += s * rng.normal(u.rows(), u.cols());
    for (auto& g : out.tt.cores)
        for (double& x : g.data) x += s * rng.normal();
    return out;
}

GaugedVariation zero_variation(const ManifoldPoint& p) {
    GaugedVariation v;
    v.base_id = p.id;
    for (const auto& u : p.U) v.dU.push_back(Matrix::Zero(u.rows(), u.cols()));
    for (const auto& g : p.P) v.dG.emplace_back(g.left, g.mid, g.right);
    return v;
}

GaugedVariation random_variation(const ManifoldPoint& p, Rng& rng) {
    GaugedVariation v = zero_variation(p);
    for (auto& u : v.dU) u = rng.normal(u.rows(), u.cols());
    for (auto& g : v.dG)
        for (double& x : g.data) x = rng.normal();
    return v;
}

GaugedVariation project_gauge(const ManifoldPoint& p, const GaugedVariation& v) {
    check_base(p, v);
    require(v.dU.size() == p.U.size() && v.dG.size() == p.P.size(), "variation arity mismatch");
    GaugedVariation out = v;
    const std::size_t d = p.U.size();
    for (std::size_t i = 0; i < d; ++i) {
        require(v.dU[i].rows() == p.U[i].rows() && v.dU[i].cols() == p.U[i].cols(), "basis variation shape mismatch");
        out.dU[i] -= p.U[i] * (p.U[i].transpose() * v.dU[i]);
        if (i + 1 < d) {
            auto pl = p.P[i].left_unfolding();
            auto gl = out.dG[i].left_unfolding();
            require(gl.rows() == pl.rows() && gl.cols() == pl.cols(), "core variation shape mismatch");
            Matrix proj = pl.transpose() * gl;
            gl -= pl * proj;
        }
    }
    return out;
}

GaugedVariation variation_axpy(double a, const GaugedVariation& v, double b, const GaugedVariation& w) {
    if (v.base_id != w.base_id) throw std::invalid_argument("variations at different base points");
    GaugedVariation out = v;
    for (std::size_t i = 0; i < out.dU.size(); ++i) out.dU[i] = a * v.dU[i] + b * w.dU[i];
    for (std::size_t i = 0; i < out.dG.size(); ++i)
        for (std::size_t k = 0; k < out.dG[i].data.size(); ++k)
            out.dG[i].data[k] = a * v.dG[i].data[k] + b * w.dG[i].data[k];
    return out;
}

double variation_inner(const GaugedVariation& v, const GaugedVariation& w) {
    if (v.base_id != w.base_id) throw std::invalid_argument("variations at different base points");
    double s = 0;
    for (std::size_t i = 0; i < v.dU.size(); ++i) s += (v.dU[i].array() * w.dU[i].array()).sum();
    for (std::size_t i = 0; i < v.dG.size(); ++i) s += core_inner(v.dG[i], w.dG[i]);
    return s;
}

double variation_norm(const GaugedVariation& v) { return std::sqrt(variation_inner(v, v)); }

TuckerTensorTrain tangent_to_doubled(const ManifoldPoint& p, const GaugedVariation& v, bool with_point) {
    check_base(p, v);
    const std::size_t d = p.U.size();
    TuckerTensorTrain t;
    for (std::size_t i = 0; i < d; ++i) {
        const Index N = p.U[i].rows(), n = p.n[i];
        Matrix b(N, 2 * n);
        b << p.U[i], v.dU[i];
        t.bases.push_back(b);

        const Index l = p.r[i], r = p.r[i + 1];
        // Full block [[Q, 0], [dG + O dxi, P]] over (2l) x (2n) x (2r); U-part
        // mids are 0..n-1, dU-part mids n..2n-1.
        Core3 w(2 * l, 2 * n, 2 * r);
        for (Index a = 0; a < l; ++a)
            for (Index m = 0; m < n; ++m)
                for (Index c = 0; c < r; ++c) {
                    w(a, m, c) = p.Q[i](a, m, c);
                    w(l + a, m, c) = v.dG[i](a, m, c);
                    w(l + a, m, r + c) = p.P[i](a, m, c);
                    w(l + a, n + m, c) = p.O[i](a, m, c);
                }
        if (with_point && i + 1 == d)
            for (Index a = 0; a < l; ++a)
                for (Index m = 0; m < n; ++m) w(l + a, m, 0) += p.P[i](a, m, 0);
        // slice: first core keeps the bottom row block, last core the left column block
        const Index a0 = (i == 0) ? l : 0, na = (i == 0) ? 1 : 2 * l;
        const Index nc = (i + 1 == d) ? 1 : 2 * r;
        Core3 s(na, 2 * n, nc);
        for (Index a = 0; a < na; ++a)
            for (Index m = 0; m < 2 * n; ++m)
                for (Index c = 0; c < nc; ++c) s(a, m, c) = w(a0 + a, m, c);
        t.tt.cores.push_back(std::move(s));
    }
    t.validate();
    return t;
}

DenseTensor tangent_to_dense(const ManifoldPoint& p, const GaugedVariation& v) {
    return contract_full(tangent_to_doubled(p, v));
}

TuckerTensorTrain attach_and_retract(const ManifoldPoint& p, const GaugedVariation& v, const std::vector<Index>& n,
                                     const std::vector<Index>& r) {
    require(n == p.n && r == p.r, "retraction ranks must equal the point's ranks");
    TuckerTensorTrain q = tangent_to_doubled(p, v, true);
    return t3_svd_implicit(q, Truncation::ranks(n, r, true)).t3;
}

TuckerTensorTrain retract(const ManifoldPoint& p, const GaugedVariation& v) { return attach_and_retract(p, v, p.n, p.r); }

Index manifold_dimension(const std::vector<Index>& dims, const std::vector<Index>& n, const std::vector<Index>& r) {
    require(n.size() == dims.size() && r.size() == dims.size() + 1, "rank vector arity mismatch");
    Index dim = 0;
    for (std::size_t i = 0; i < dims.size(); ++i) dim += dims[i] * n[i] - n[i] * n[i] + r[i] * n[i] * r[i + 1];
    for (std::size_t i = 1; i + 1 < r.size(); ++i) dim -= r[i] * r[i];
    return dim;
}

}  // namespace t4s
