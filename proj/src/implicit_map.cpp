#include "t4s/implicit_map.hpp"

#include <cmath>

namespace t4s {

namespace {

class DenseLuSolver final : public LinearSolver {
public:
    explicit DenseLuSolver(const Matrix& a) : lu_(a), lut_(a.transpose()) {
        if (!(lu_.rcond() > 1e-14)) throw SingularOperator("state operator is singular");
    }
    Vector solve(const Vector& b) const override { return lu_.solve(b); }
    Vector solve_adjoint(const Vector& b) const override { return lut_.solve(b); }

private:
    Eigen::PartialPivLU<Matrix> lu_, lut_;
};

Vector hadamard(const Vector& a, const Vector& b) { return a.cwiseProduct(b); }

}  // namespace

BuiltinMap::BuiltinMap(Index dim_in, Index dim_out, std::uint64_t seed, BuiltinMapOptions opts)
    : n_(dim_in), gamma_(opts.gamma) {
    require(dim_in >= 1 && dim_out >= 1, "map dimensions must be positive");
    Rng rng(seed);
    Matrix b = rng.normal(n_, n_);
    M_ = Matrix::Identity(n_, n_) + b * b.transpose() / static_cast<double>(n_);
    s_ = rng.normal(n_);
    E_ = rng.normal(dim_out, n_) / std::sqrt(static_cast<double>(n_));
    D_ = 0.1 * rng.normal(dim_out, n_) / std::sqrt(static_cast<double>(n_));
}

Matrix BuiltinMap::A(const Vector& theta, const Vector& u) const {
    Matrix a = M_;
    a.diagonal() += theta + 3.0 * gamma_ * u.cwiseProduct(u);
    return a;
}

Vector BuiltinMap::residual(const Vector& theta, const Vector& u) const {
    return M_ * u + hadamard(theta, u) + gamma_ * u.array().cube().matrix() - s_;
}

Vector BuiltinMap::output(const Vector& theta, const Vector& u) const { return E_ * u + D_ * theta; }

Vector BuiltinMap::solve_state(const Vector& theta) const {
    require(theta.size() == n_, "parameter dimension mismatch");
    Matrix lin = M_;
    lin.diagonal() += theta;
    Vector u = lin.partialPivLu().solve(s_);
    const double scale = std::max(1.0, s_.norm());
    for (int it = 0; it < 100; ++it) {
        Vector r = residual(theta, u);
        if (r.norm() <= 1e-15 * scale && it > 0) break;
        Vector du = A(theta, u).partialPivLu().solve(r);
        u -= du;
        if (du.norm() <= 1e-16 * std::max(1.0, u.norm())) break;
    }
    if (!u.allFinite()) throw SingularOperator("state solve diverged");
    return u;
}

std::shared_ptr<const LinearSolver> BuiltinMap::linearize(const Vector& theta, const Vector& u) const {
    return std::make_shared<DenseLuSolver>(A(theta, u));
}

Vector BuiltinMap::R_partial(const Vector& theta, const Vector& u, const Dirs& th, const Dirs& ud) const {
    const std::size_t k = th.size(), m = ud.size();
    if (k == 0 && m == 0) return residual(theta, u);
    if (k == 0 && m == 1) {
        const Vector& a = *ud[0];
        return M_ * a + hadamard(theta, a) + 3.0 * gamma_ * u.cwiseProduct(u).cwiseProduct(a);
    }
    if (k == 0 && m == 2) return 6.0 * gamma_ * u.cwiseProduct(*ud[0]).cwiseProduct(*ud[1]);
    if (k == 0 && m == 3) return 6.0 * gamma_ * ud[0]->cwiseProduct(*ud[1]).cwiseProduct(*ud[2]);
    if (k == 1 && m == 0) return hadamard(*th[0], u);
    if (k == 1 && m == 1) return hadamard(*th[0], *ud[0]);
    return Vector::Zero(n_);
}

Vector BuiltinMap::Q_partial(const Vector& theta, const Vector& u, const Dirs& th, const Dirs& ud) const {
    const std::size_t k = th.size(), m = ud.size();
    if (k == 0 && m == 0) return output(theta, u);
    if (k == 1 && m == 0) return D_ * *th[0];
    if (k == 0 && m == 1) return E_ * *ud[0];
    return Vector::Zero(E_.rows());
}

Vector BuiltinMap::R_adjoint_partial(const Vector& theta, const Vector& u, const Vector& v, Slot open, const Dirs& th,
                                     const Dirs& ud) const {
    const std::size_t k = th.size(), m = ud.size();
    if (open == Slot::Theta) {
        if (k == 0 && m == 0) return hadamard(v, u);
        if (k == 0 && m == 1) return hadamard(v, *ud[0]);
        return Vector::Zero(n_);
    }
    require(open == Slot::U, "adjoint partial needs an open slot");
    if (k == 0 && m == 0) return A(theta, u).transpose() * v;
    if (k == 0 && m == 1) return 6.0 * gamma_ * u.cwiseProduct(*ud[0]).cwiseProduct(v);
    if (k == 0 && m == 2) return 6.0 * gamma_ * ud[0]->cwiseProduct(*ud[1]).cwiseProduct(v);
    if (k == 1 && m == 0) return hadamard(*th[0], v);
    return Vector::Zero(n_);
}

Vector BuiltinMap::Q_adjoint_partial(const Vector&, const Vector&, const Vector& omega, Slot open, const Dirs& th,
                                     const Dirs& ud) const {
    if (!th.empty() || !ud.empty()) return Vector::Zero(n_);
    if (open == Slot::Theta) return D_.transpose() * omega;
    require(open == Slot::U, "adjoint partial needs an open slot");
    return E_.transpose() * omega;
}

bool BuiltinMap::R_vanishes(int n_theta, int n_u) const {
    if (n_theta >= 2) return true;
    if (n_theta == 1 && n_u >= 2) return true;
    return n_u >= 4;
}

bool BuiltinMap::Q_vanishes(int n_theta, int n_u) const { return n_theta + n_u >= 2; }

std::shared_ptr<BuiltinMap> builtin_test_map(Index dim_in, Index dim_out, std::uint64_t seed, BuiltinMapOptions opts) {
    require(dim_in <= 50 && dim_out <= 50, "built-in map is meant for small dimensions");
    return std::make_shared<BuiltinMap>(dim_in, dim_out, seed, opts);
}

// ---------------------------------------------------------------------------

ReducedImplicitMap::ReducedImplicitMap(std::shared_ptr<const ImplicitMap> base, Vector theta0, Matrix lift,
                                       Matrix out_basis)
    : base_(std::move(base)), theta0_(std::move(theta0)), L_(std::move(lift)), V_(std::move(out_basis)) {
    require(base_ != nullptr, "null base map");
    require(theta0_.size() == base_->theta_dim() && L_.rows() == base_->theta_dim(), "lift dimension mismatch");
    require(V_.rows() == base_->output_dim(), "output basis dimension mismatch");
}

std::vector<Vector> ReducedImplicitMap::lifted(const Dirs& th) const {
    std::vector<Vector> out;
    out.reserve(th.size());
    for (const Vector* x : th) out.push_back(L_ * *x);
    return out;
}

namespace {
ImplicitMap::Dirs pointers(const std::vector<Vector>& v) {
    ImplicitMap::Dirs d;
    for (const auto& x : v) d.push_back(&x);
    return d;
}
}  // namespace

Vector ReducedImplicitMap::solve_state(const Vector& x) const { return base_->solve_state(theta(x)); }
Vector ReducedImplicitMap::residual(const Vector& x, const Vector& u) const { return base_->residual(theta(x), u); }
Vector ReducedImplicitMap::output(const Vector& x, const Vector& u) const {
    return V_.transpose() * base_->output(theta(x), u);
}
std::shared_ptr<const LinearSolver> ReducedImplicitMap::linearize(const Vector& x, const Vector& u) const {
    return base_->linearize(theta(x), u);
}

Vector ReducedImplicitMap::R_partial(const Vector& x, const Vector& u, const Dirs& th, const Dirs& ud) const {
    auto l = lifted(th);
    return base_->R_partial(theta(x), u, pointers(l), ud);
}

Vector ReducedImplicitMap::Q_partial(const Vector& x, const Vector& u, const Dirs& th, const Dirs& ud) const {
    auto l = lifted(th);
    return V_.transpose() * base_->Q_partial(theta(x), u, pointers(l), ud);
}

Vector ReducedImplicitMap::R_adjoint_partial(const Vector& x, const Vector& u, const Vector& v, Slot open,
                                             const Dirs& th, const Dirs& ud) const {
    auto l = lifted(th);
    Vector r = base_->R_adjoint_partial(theta(x), u, v, open, pointers(l), ud);
    return open == Slot::Theta ? Vector(L_.transpose() * r) : r;
}

Vector ReducedImplicitMap::Q_adjoint_partial(const Vector& x, const Vector& u, const Vector& omega, Slot open,
                                             const Dirs& th, const Dirs& ud) const {
    auto l = lifted(th);
    Vector r = base_->Q_adjoint_partial(theta(x), u, V_ * omega, open, pointers(l), ud);
    return open == Slot::Theta ? Vector(L_.transpose() * r) : r;
}

}  // namespace t4s
