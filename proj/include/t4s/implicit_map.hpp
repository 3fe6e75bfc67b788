#pragma once

#include "t4s/symbolic.hpp"
#include "t4s/types.hpp"

#include <memory>

namespace t4s {

class LinearSolver {
public:
    virtual ~LinearSolver() = default;
    /// Solve A x = b, A = d_u R at the base point.
    virtual Vector solve(const Vector& b) const = 0;
    /// Solve A^T x = b.
    virtual Vector solve_adjoint(const Vector& b) const = 0;
};

struct SingularOperator : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// q(theta) = Q(theta, u(theta)) with R(theta, u(theta)) = 0.
class ImplicitMap {
public:
    using Dirs = std::vector<const Vector*>;

    virtual ~ImplicitMap() = default;
    virtual Index theta_dim() const = 0;
    virtual Index state_dim() const = 0;
    virtual Index output_dim() const = 0;

    virtual Vector solve_state(const Vector& theta) const = 0;
    virtual Vector residual(const Vector& theta, const Vector& u) const = 0;
    virtual Vector output(const Vector& theta, const Vector& u) const = 0;
    virtual std::shared_ptr<const LinearSolver> linearize(const Vector& theta, const Vector& u) const = 0;

    /// d_theta^k d_u^m R applied to the given directions.
    virtual Vector R_partial(const Vector& theta, const Vector& u, const Dirs& th, const Dirs& ud) const = 0;
    virtual Vector Q_partial(const Vector& theta, const Vector& u, const Dirs& th, const Dirs& ud) const = 0;
    /// Covector v(d_open d_theta^k d_u^m R) in the open slot's space.
    virtual Vector R_adjoint_partial(const Vector& theta, const Vector& u, const Vector& v, Slot open, const Dirs& th,
                                     const Dirs& ud) const = 0;
    virtual Vector Q_adjoint_partial(const Vector& theta, const Vector& u, const Vector& omega, Slot open,
                                     const Dirs& th, const Dirs& ud) const = 0;

    /// True when the partial with these derivative counts (open slot included)
    /// is identically zero; must be closed under increasing counts.
    virtual bool R_vanishes(int /*n_theta*/, int /*n_u*/) const { return false; }
    virtual bool Q_vanishes(int /*n_theta*/, int /*n_u*/) const { return false; }

    Vector q(const Vector& theta) const { return output(theta, solve_state(theta)); }
};

struct BuiltinMapOptions {
    double gamma = 0.1;
};

/// R(theta,u) = (M + diag(theta)) u + gamma u.^3 - s,  Q(theta,u) = E u + D theta.
class BuiltinMap final : public ImplicitMap {
public:
    BuiltinMap(Index dim_in, Index dim_out, std::uint64_t seed, BuiltinMapOptions opts = {});

    Index theta_dim() const override { return n_; }
    Index state_dim() const override { return n_; }
    Index output_dim() const override { return E_.rows(); }

    Vector solve_state(const Vector& theta) const override;
    Vector residual(const Vector& theta, const Vector& u) const override;
    Vector output(const Vector& theta, const Vector& u) const override;
    std::shared_ptr<const LinearSolver> linearize(const Vector& theta, const Vector& u) const override;

    Vector R_partial(const Vector& theta, const Vector& u, const Dirs& th, const Dirs& ud) const override;
    Vector Q_partial(const Vector& theta, const Vector& u, const Dirs& th, const Dirs& ud) const override;
    Vector R_adjoint_partial(const Vector& theta, const Vector& u, const Vector& v, Slot open, const Dirs& th,
                             const Dirs& ud) const override;
    Vector Q_adjoint_partial(const Vector& theta, const Vector& u, const Vector& omega, Slot open, const Dirs& th,
                             const Dirs& ud) const override;
    bool R_vanishes(int n_theta, int n_u) const override;
    bool Q_vanishes(int n_theta, int n_u) const override;

    const Matrix& M() const { return M_; }
    const Matrix& E() const { return E_; }
    const Matrix& D() const { return D_; }
    const Vector& s() const { return s_; }
    double gamma() const { return gamma_; }

private:
    Matrix A(const Vector& theta, const Vector& u) const;

    Index n_;
    Matrix M_, E_, D_;
    Vector s_;
    double gamma_;
};

std::shared_ptr<BuiltinMap> builtin_test_map(Index dim_in, Index dim_out, std::uint64_t seed,
                                             BuiltinMapOptions opts = {});

/// x -> V^T q(theta0 + L x) with L = C U; L and V given as matrices.
class ReducedImplicitMap final : public ImplicitMap {
public:
    ReducedImplicitMap(std::shared_ptr<const ImplicitMap> base, Vector theta0, Matrix lift, Matrix out_basis);

    Index theta_dim() const override { return L_.cols(); }
    Index state_dim() const override { return base_->state_dim(); }
    Index output_dim() const override { return V_.cols(); }

    Vector solve_state(const Vector& x) const override;
    Vector residual(const Vector& x, const Vector& u) const override;
    Vector output(const Vector& x, const Vector& u) const override;
    std::shared_ptr<const LinearSolver> linearize(const Vector& x, const Vector& u) const override;

    Vector R_partial(const Vector& x, const Vector& u, const Dirs& th, const Dirs& ud) const override;
    Vector Q_partial(const Vector& x, const Vector& u, const Dirs& th, const Dirs& ud) const override;
    Vector R_adjoint_partial(const Vector& x, const Vector& u, const Vector& v, Slot open, const Dirs& th,
                             const Dirs& ud) const override;
    Vector Q_adjoint_partial(const Vector& x, const Vector& u, const Vector& omega, Slot open, const Dirs& th,
                             const Dirs& ud) const override;
    bool R_vanishes(int n_theta, int n_u) const override { return base_->R_vanishes(n_theta, n_u); }
    bool Q_vanishes(int n_theta, int n_u) const override { return base_->Q_vanishes(n_theta, n_u); }

    const Matrix& lift() const { return L_; }
    const Matrix& out_basis() const { return V_; }
    const Vector& theta0() const { return theta0_; }

private:
    Vector theta(const Vector& x) const { return theta0_ + L_ * x; }
    std::vector<Vector> lifted(const Dirs& th) const;

    std::shared_ptr<const ImplicitMap> base_;
    Vector theta0_;
    Matrix L_, V_;
};

}  // namespace t4s
