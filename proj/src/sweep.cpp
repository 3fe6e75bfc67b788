#include "t4s/sweep.hpp"

namespace t4s {

namespace {

// sum_{a,b} mu_a x_b G[a,b,:]
Vector contract_left(const Core3& g, const Vector& mu, const Vector& x) {
    Eigen::RowVectorXd t = mu.transpose() * g.right_unfolding();
    Eigen::Map<const RowMatrix> tm(t.data(), g.mid, g.right);
    return tm.transpose() * x;
}

// sum_{b,c} x_b nu_c G[:,b,c]
Vector contract_right(const Core3& g, const Vector& x, const Vector& nu) {
    Vector s = g.left_unfolding() * nu;
    Eigen::Map<const RowMatrix> sm(s.data(), g.left, g.mid);
    return sm * x;
}

// sum_{a,c} mu_a nu_c G[a,:,c]
Vector contract_outer(const Core3& g, const Vector& mu, const Vector& nu) {
    Vector s = g.left_unfolding() * nu;
    Eigen::Map<const RowMatrix> sm(s.data(), g.left, g.mid);
    return sm.transpose() * mu;
}

// out[a,b,c] += s * x[a] y[b] z[c]
void add_outer(Core3& out, double s, const Vector& x, const Vector& y, const Vector& z) {
    for (Index a = 0; a < out.left; ++a) {
        const double xa = s * x[a];
        if (xa == 0) continue;
        Eigen::Map<RowMatrix> blk(out.data.data() + a * out.mid * out.right, out.mid, out.right);
        blk.noalias() += (xa * y) * z.transpose();
    }
}

struct Frame {
    const std::vector<Matrix>& U;
    const std::vector<Core3>& P;
    const std::vector<Core3>& Q;
    const std::vector<Core3>& O;
};

EdgeCache build_cache(const Frame& f, const std::vector<Vector>& w) {
    const std::size_t d = f.U.size();
    require(w.size() == d, "one probing vector per index required");
    EdgeCache c;
    c.w = w;
    c.xi.resize(d);
    c.mu.resize(d + 1);
    c.nu.resize(d + 1);
    c.eta.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        require(w[i].size() == f.U[i].rows(), "probe dimension mismatch");
        c.xi[i] = f.U[i].transpose() * w[i];
        ++c.ops.basis;
    }
    c.mu[0] = Vector::Ones(1);
    c.nu[d] = Vector::Ones(1);
    for (std::size_t i = 0; i + 1 < d; ++i) {
        c.mu[i + 1] = contract_left(f.P[i], c.mu[i], c.xi[i]);
        ++c.ops.left;
    }
    for (std::size_t i = d; i-- > 1;) {
        c.nu[i] = contract_right(f.Q[i], c.xi[i], c.nu[i + 1]);
        ++c.ops.right;
    }
    for (std::size_t i = 0; i < d; ++i) {
        c.eta[i] = contract_outer(f.O[i], c.mu[i], c.nu[i + 1]);
        ++c.ops.central;
    }
    return c;
}

std::vector<Vector> sweep_J(const Frame& f, const EdgeCache& c, const GaugedVariation& v) {
    const std::size_t d = f.U.size();
    require(v.dU.size() == d && v.dG.size() == d, "variation arity mismatch");
    std::vector<Vector> dxi(d), sigma(d + 1), tau(d + 1);
    for (std::size_t i = 0; i < d; ++i) dxi[i] = v.dU[i].transpose() * c.w[i];
    sigma[0] = Vector::Zero(1);
    for (std::size_t i = 0; i + 1 < d; ++i) {
        sigma[i + 1] = contract_left(f.Q[i], sigma[i], c.xi[i]) + contract_left(v.dG[i], c.mu[i], c.xi[i]) +
                       contract_left(f.O[i], c.mu[i], dxi[i]);
    }
    tau[d] = Vector::Zero(1);
    for (std::size_t i = d; i-- > 1;) {
        tau[i] = contract_right(v.dG[i], c.xi[i], c.nu[i + 1]) + contract_right(f.O[i], dxi[i], c.nu[i + 1]) +
                 contract_right(f.P[i], c.xi[i], tau[i + 1]);
    }
    std::vector<Vector> z(d);
    for (std::size_t i = 0; i < d; ++i) {
        Vector deta = contract_outer(v.dG[i], c.mu[i], c.nu[i + 1]);
        if (i > 0) deta += contract_outer(f.Q[i], sigma[i], c.nu[i + 1]);
        if (i + 1 < d) deta += contract_outer(f.P[i], c.mu[i], tau[i + 1]);
        z[i] = f.U[i] * deta + v.dU[i] * c.eta[i];
    }
    return z;
}

void sweep_JT(const Frame& f, const EdgeCache& c, const std::vector<Vector>& zt, GaugedVariation& out) {
    const std::size_t d = f.U.size();
    require(zt.size() == d, "one adjoint vector per index required");
    std::vector<Vector> deta(d), taut(d + 1), sigt(d + 1);
    for (std::size_t i = 0; i < d; ++i) {
        require(zt[i].size() == f.U[i].rows(), "adjoint vector dimension mismatch");
        deta[i] = f.U[i].transpose() * zt[i];
    }
    taut[0] = Vector::Zero(1);
    for (std::size_t i = 1; i < d; ++i)
        taut[i] = contract_left(f.P[i - 1], c.mu[i - 1], deta[i - 1]) + contract_left(f.P[i - 1], taut[i - 1], c.xi[i - 1]);
    sigt[d] = Vector::Zero(1);
    for (std::size_t i = d - 1; i >= 1; --i)
        sigt[i] = contract_right(f.Q[i], deta[i], c.nu[i + 1]) + contract_right(f.Q[i], c.xi[i], sigt[i + 1]);
    for (std::size_t i = 0; i < d; ++i) {
        Vector dxit = Vector::Zero(f.U[i].cols());
        if (i + 1 < d) dxit += contract_outer(f.O[i], c.mu[i], sigt[i + 1]);
        if (i > 0) dxit += contract_outer(f.O[i], taut[i], c.nu[i + 1]);
        out.dU[i].noalias() += zt[i] * c.eta[i].transpose() + c.w[i] * dxit.transpose();
        Core3& g = out.dG[i];
        add_outer(g, 1.0, c.mu[i], deta[i], c.nu[i + 1]);
        if (i + 1 < d) add_outer(g, 1.0, c.mu[i], c.xi[i], sigt[i + 1]);
        if (i > 0) add_outer(g, 1.0, taut[i], c.xi[i], c.nu[i + 1]);
    }
}

Frame point_frame(const ManifoldPoint& p) { return {p.U, p.P, p.Q, p.O}; }
Frame raw_frame(const TuckerTensorTrain& t) { return {t.bases, t.tt.cores, t.tt.cores, t.tt.cores}; }

void check_cache(std::uint64_t id, const EdgeCache& c) {
    if (c.base_id != id) throw std::invalid_argument("edge cache was built for a different point");
}

}  // namespace

ProbeResult probe_t3(const TuckerTensorTrain& t, const std::vector<Vector>& w) {
    t.validate();
    ProbeResult res;
    res.cache = build_cache(raw_frame(t), w);
    for (std::size_t i = 0; i < t.bases.size(); ++i) {
        res.z.push_back(t.bases[i] * res.cache.eta[i]);
        ++res.cache.ops.expand;
    }
    return res;
}

ProbeResult probe_t3(const ManifoldPoint& p, const std::vector<Vector>& w) {
    ProbeResult res;
    res.cache = build_cache(point_frame(p), w);
    res.cache.base_id = p.id;
    for (std::size_t i = 0; i < p.U.size(); ++i) {
        res.z.push_back(p.Ut[i] * res.cache.eta[i]);
        ++res.cache.ops.expand;
    }
    return res;
}

std::vector<Vector> apply_J(const ManifoldPoint& p, const EdgeCache& cache, const GaugedVariation& v) {
    check_cache(p.id, cache);
    if (v.base_id != p.id) throw std::invalid_argument("variation belongs to a different base point");
    return sweep_J(point_frame(p), cache, v);
}

void apply_JT_add(const ManifoldPoint& p, const EdgeCache& cache, const std::vector<Vector>& zt, GaugedVariation& out) {
    check_cache(p.id, cache);
    if (out.base_id != p.id) throw std::invalid_argument("variation belongs to a different base point");
    sweep_JT(point_frame(p), cache, zt, out);
}

GaugedVariation apply_JT(const ManifoldPoint& p, const EdgeCache& cache, const std::vector<Vector>& zt) {
    GaugedVariation out = zero_variation(p);
    apply_JT_add(p, cache, zt, out);
    return out;
}

CoreVariation zero_core_variation(const TuckerTensorTrain& t) {
    CoreVariation v;
    for (const auto& u : t.bases) v.dU.push_back(Matrix::Zero(u.rows(), u.cols()));
    for (const auto& g : t.tt.cores) v.dG.emplace_back(g.left, g.mid, g.right);
    return v;
}

std::vector<Vector> apply_J_corewise(const TuckerTensorTrain& t, const EdgeCache& cache, const CoreVariation& v) {
    check_cache(0, cache);
    return sweep_J(raw_frame(t), cache, v);
}

CoreVariation apply_JT_corewise(const TuckerTensorTrain& t, const EdgeCache& cache, const std::vector<Vector>& zt) {
    check_cache(0, cache);
    CoreVariation out = zero_core_variation(t);
    sweep_JT(raw_frame(t), cache, zt, out);
    return out;
}

}  // namespace t4s

// ---------------------------------------------------------------------------
// Batched sweeps: the per-sample contractions above become products with
// column-wise Kronecker (Khatri-Rao) products.

namespace t4s {

namespace {

// k[a*q + b, s] = x[a, s] * y[b, s]
Matrix khatri_rao(const Matrix& x, const Matrix& y) {
    const Index p = x.rows(), q = y.rows(), n = x.cols();
    Matrix k(p * q, n);
    for (Index s = 0; s < n; ++s)
        for (Index a = 0; a < p; ++a) k.col(s).segment(a * q, q) = x(a, s) * y.col(s);
    return k;
}

Matrix batch_left(const Core3& g, const Matrix& mu, const Matrix& x) {
    return g.left_unfolding().transpose() * khatri_rao(mu, x);
}

Matrix batch_right(const Core3& g, const Matrix& x, const Matrix& nu) {
    return g.right_unfolding() * khatri_rao(x, nu);
}

Matrix batch_outer(const Core3& g, const Matrix& mu, const Matrix& nu) {
    return g.outer_unfolding().transpose() * khatri_rao(mu, nu);
}

void check_batch(const ManifoldPoint& p, const BatchCache& c) {
    if (c.base_id != p.id) throw std::invalid_argument("batch cache was built for a different point");
}

}  // namespace

BatchCache batch_cache(const ManifoldPoint& p, std::vector<Matrix> w) {
    const std::size_t d = p.U.size();
    require(w.size() == d, "one probing block per index required");
    BatchCache c;
    c.base_id = p.id;
    c.w = std::move(w);
    const Index n = c.w[0].cols();
    c.xi.resize(d);
    c.mu.resize(d + 1);
    c.nu.resize(d + 1);
    c.eta.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        require(c.w[i].rows() == p.U[i].rows() && c.w[i].cols() == n, "probe block shape mismatch");
        c.xi[i] = p.U[i].transpose() * c.w[i];
    }
    c.mu[0] = Matrix::Ones(1, n);
    c.nu[d] = Matrix::Ones(1, n);
    for (std::size_t i = 0; i + 1 < d; ++i) c.mu[i + 1] = batch_left(p.P[i], c.mu[i], c.xi[i]);
    for (std::size_t i = d; i-- > 1;) c.nu[i] = batch_right(p.Q[i], c.xi[i], c.nu[i + 1]);
    for (std::size_t i = 0; i < d; ++i) c.eta[i] = batch_outer(p.O[i], c.mu[i], c.nu[i + 1]);
    return c;
}

std::vector<Matrix> batch_probe(const ManifoldPoint& p, const BatchCache& c) {
    check_batch(p, c);
    std::vector<Matrix> z;
    for (std::size_t i = 0; i < p.U.size(); ++i) z.push_back(p.Ut[i] * c.eta[i]);
    return z;
}

std::vector<Matrix> batch_J(const ManifoldPoint& p, const BatchCache& c, const GaugedVariation& v) {
    check_batch(p, c);
    if (v.base_id != p.id) throw std::invalid_argument("variation belongs to a different base point");
    const std::size_t d = p.U.size();
    std::vector<Matrix> dxi(d), sigma(d + 1), tau(d + 1);
    for (std::size_t i = 0; i < d; ++i) dxi[i] = v.dU[i].transpose() * c.w[i];
    for (std::size_t i = 0; i + 1 < d; ++i) {
        sigma[i + 1] = batch_left(v.dG[i], c.mu[i], c.xi[i]) + batch_left(p.O[i], c.mu[i], dxi[i]);
        if (i > 0) sigma[i + 1] += batch_left(p.Q[i], sigma[i], c.xi[i]);
    }
    for (std::size_t i = d; i-- > 1;) {
        tau[i] = batch_right(v.dG[i], c.xi[i], c.nu[i + 1]) + batch_right(p.O[i], dxi[i], c.nu[i + 1]);
        if (i + 1 < d) tau[i] += batch_right(p.P[i], c.xi[i], tau[i + 1]);
    }
    std::vector<Matrix> z(d);
    for (std::size_t i = 0; i < d; ++i) {
        Matrix deta = batch_outer(v.dG[i], c.mu[i], c.nu[i + 1]);
        if (i > 0) deta += batch_outer(p.Q[i], sigma[i], c.nu[i + 1]);
        if (i + 1 < d) deta += batch_outer(p.P[i], c.mu[i], tau[i + 1]);
        z[i] = p.U[i] * deta + v.dU[i] * c.eta[i];
    }
    return z;
}

void batch_JT_add(const ManifoldPoint& p, const BatchCache& c, const std::vector<Matrix>& zt, GaugedVariation& out) {
    check_batch(p, c);
    if (out.base_id != p.id) throw std::invalid_argument("variation belongs to a different base point");
    const std::size_t d = p.U.size();
    require(zt.size() == d, "one adjoint block per index required");
    std::vector<Matrix> deta(d), taut(d + 1), sigt(d + 1);
    for (std::size_t i = 0; i < d; ++i) {
        require(zt[i].rows() == p.U[i].rows() && zt[i].cols() == c.size(), "adjoint block shape mismatch");
        deta[i] = p.U[i].transpose() * zt[i];
    }
    for (std::size_t i = 1; i < d; ++i) {
        taut[i] = batch_left(p.P[i - 1], c.mu[i - 1], deta[i - 1]);
        if (i > 1) taut[i] += batch_left(p.P[i - 1], taut[i - 1], c.xi[i - 1]);
    }
    for (std::size_t i = d - 1; i >= 1; --i) {
        sigt[i] = batch_right(p.Q[i], deta[i], c.nu[i + 1]);
        if (i + 1 < d) sigt[i] += batch_right(p.Q[i], c.xi[i], sigt[i + 1]);
    }
    for (std::size_t i = 0; i < d; ++i) {
        const Core3& o = p.O[i];
        Matrix dxit = Matrix::Zero(o.mid, c.size());
        if (i + 1 < d) dxit += batch_outer(o, c.mu[i], sigt[i + 1]);
        if (i > 0) dxit += batch_outer(o, taut[i], c.nu[i + 1]);
        out.dU[i].noalias() += zt[i] * c.eta[i].transpose();
        out.dU[i].noalias() += c.w[i] * dxit.transpose();
        auto gl = out.dG[i].left_unfolding();
        gl.noalias() += khatri_rao(c.mu[i], deta[i]) * c.nu[i + 1].transpose();
        if (i + 1 < d) gl.noalias() += khatri_rao(c.mu[i], c.xi[i]) * sigt[i + 1].transpose();
        if (i > 0) gl.noalias() += khatri_rao(taut[i], c.xi[i]) * c.nu[i + 1].transpose();
    }
}

}  // namespace t4s
