#include "t4s/sketch.hpp"

#include "t4s/linalg.hpp"

namespace t4s {

namespace {

// Incremental orthonormal basis with the accept-if-unexplained test.
class GrowingBasis {
public:
    GrowingBasis(Index dim, int reorth_every) : q_(dim, 0), reorth_every_(reorth_every) {}

    bool full() const { return q_.cols() >= q_.rows(); }

    bool offer(const Vector& y, double eps) {
        if (full()) return false;
        Vector rho = y - q_ * (q_.transpose() * y);
        rho -= q_ * (q_.transpose() * rho);
        double rn = rho.norm();
        if (!(rn >= eps * y.norm()) || rn == 0.0) return false;
        q_.conservativeResize(Eigen::NoChange, q_.cols() + 1);
        q_.col(q_.cols() - 1) = rho / rn;
        if (reorth_every_ > 0 && ++inserted_ % reorth_every_ == 0) q_ = orthonormal_columns(q_);
        return true;
    }

    const Matrix& basis() const { return q_; }

private:
    Matrix q_;
    int reorth_every_;
    int inserted_ = 0;
};

void check(const SketchConfig& cfg) {
    require(cfg.eps > 0.0 && cfg.eps < 1.0, "sketch tolerance must lie in (0,1)");
    require(cfg.patience >= 1, "sketch patience must be positive");
    require(cfg.max_order >= 1, "sketch order must be positive");
}

}  // namespace

SketchResult build_output_basis(const ImplicitMap& map, const Matrix& c, const Vector& theta0,
                                const SketchConfig& cfg, std::uint64_t seed) {
    check(cfg);
    require(c.rows() == map.theta_dim(), "preconditioner rows must match the parameter dimension");
    BasePoint base = make_base_point(map, theta0);
    GrowingBasis v(map.output_dim(), cfg.reorth_every);
    Rng rng(seed);
    SketchResult out;
    int quiet = 0;
    while (quiet < cfg.patience && out.iterations < cfg.max_iterations) {
        ++out.iterations;
        Vector th = c * rng.normal(c.cols());
        ProbeSession session(map, base, {th});
        bool updated = false;
        for (int j = 1; j <= cfg.max_order; ++j) updated |= v.offer(session.forward(ms_add(0, 0, j)), cfg.eps);
        quiet = updated ? 0 : quiet + 1;
        if (v.full()) {
            out.saturated = true;
            break;
        }
    }
    out.basis = v.basis();
    return out;
}

SketchResult build_input_basis(const ImplicitMap& map, const Matrix& c, const Vector& theta0, const Matrix& v,
                               const SketchConfig& cfg, std::uint64_t seed) {
    check(cfg);
    require(c.rows() == map.theta_dim(), "preconditioner rows must match the parameter dimension");
    require(v.rows() == map.output_dim(), "output basis rows must match the output dimension");
    BasePoint base = make_base_point(map, theta0);
    GrowingBasis u(c.cols(), cfg.reorth_every);
    Rng rng(seed);
    SketchResult out;
    int quiet = 0;
    while (quiet < cfg.patience && out.iterations < cfg.max_iterations) {
        ++out.iterations;
        Vector th = c * rng.normal(c.cols());
        Vector omega = v * rng.normal(v.cols());
        ProbeSession session(map, base, {th});
        bool updated = false;
        for (int j = 1; j <= cfg.max_order; ++j) {
            Vector xhat = c.transpose() * session.reverse(ms_add(0, 0, j - 1), omega);
            updated |= u.offer(xhat, cfg.eps);
        }
        quiet = updated ? 0 : quiet + 1;
        if (u.full()) {
            out.saturated = true;
            break;
        }
    }
    out.basis = u.basis();
    return out;
}

ReducedImplicitMap reduce_map(std::shared_ptr<const ImplicitMap> map, const Matrix& u, const Matrix& v,
                              const Matrix& c, const Vector& theta0) {
    require(c.cols() == u.rows(), "input basis rows must match the preconditioner columns");
    return ReducedImplicitMap(std::move(map), theta0, c * u, v);
}

}  // namespace t4s
