#include "oracles.hpp"

#include "t4s/manifold.hpp"

#include <gtest/gtest.h>

using namespace t4s;

namespace {

ManifoldPoint sample_point(Rng& rng, const std::vector<Index>& dims, const std::vector<Index>& n,
                           const std::vector<Index>& r) {
    return prepare_point(TuckerTensorTrain::random(dims, n, r, rng));
}

double orth_defect(const Matrix& m) {
    return (m.transpose() * m - Matrix::Identity(m.cols(), m.cols())).norm();
}

}  // namespace

TEST(PreparePoint, Invariants) {
    Rng rng(1);
    auto t = TuckerTensorTrain::random({4, 5, 3, 4}, {2, 3, 2, 2}, {1, 2, 3, 2, 1}, rng);
    auto p = prepare_point(t);
    auto dense = contract_full(t);
    for (const auto& u : p.U) EXPECT_LT(orth_defect(u), 1e-12);
    for (std::size_t i = 0; i + 1 < p.P.size(); ++i) EXPECT_LT(orth_defect(p.P[i].left_unfolding()), 1e-12);
    for (std::size_t i = 1; i < p.Q.size(); ++i) EXPECT_LT(orth_defect(Matrix(p.Q[i].right_unfolding().transpose())), 1e-12);
    for (const auto& o : p.O) EXPECT_LT(orth_defect(o.outer_unfolding()), 1e-12);
    EXPECT_LT(oracle::rel(dense, contract_full(p.as_t3())), 1e-12);
    for (std::size_t i = 0; i < p.Gt.size(); ++i) {
        std::vector<Core3> cores;
        for (std::size_t j = 0; j < p.Gt.size(); ++j) cores.push_back(j < i ? p.P[j] : (j == i ? p.Gt[j] : p.Q[j]));
        EXPECT_LT(oracle::rel(dense, oracle::contract(p.U, cores)), 1e-12);
        auto alt = p.U;
        alt[i] = p.Ut[i];
        cores[i] = p.O[i];
        EXPECT_LT(oracle::rel(dense, oracle::contract(alt, cores)), 1e-12);
    }
}

TEST(PreparePoint, RejectsDegenerateRanks) {
    Rng rng(2);
    auto t = TuckerTensorTrain::random({2, 2}, {2, 2}, {1, 3, 1}, rng);
    EXPECT_THROW(prepare_point(t), DegeneratePoint);
}

TEST(Gauge, ProjectionIsIdempotentAndSatisfiesConstraints) {
    Rng rng(3);
    auto p = sample_point(rng, {4, 3, 5}, {2, 2, 3}, {1, 2, 3, 1});
    auto v = project_gauge(p, random_variation(p, rng));
    for (std::size_t i = 0; i < p.U.size(); ++i) EXPECT_LT((p.U[i].transpose() * v.dU[i]).norm(), 1e-12);
    for (std::size_t i = 0; i + 1 < p.P.size(); ++i)
        EXPECT_LT((p.P[i].left_unfolding().transpose() * v.dG[i].left_unfolding()).norm(), 1e-12);
    auto w = project_gauge(p, v);
    EXPECT_LT(variation_norm(variation_axpy(1.0, v, -1.0, w)), 1e-13);
}

TEST(Gauge, InnerProductIsHilbertSchmidt) {
    Rng rng(4);
    auto p = sample_point(rng, {4, 3, 5, 3}, {2, 2, 3, 2}, {1, 2, 3, 2, 1});
    for (int trial = 0; trial < 10; ++trial) {
        auto v = project_gauge(p, random_variation(p, rng));
        auto w = project_gauge(p, random_variation(p, rng));
        auto dv = tangent_to_dense(p, v), dw = tangent_to_dense(p, w);
        double hs = 0;
        for (std::size_t k = 0; k < dv.data().size(); ++k) hs += dv.data()[k] * dw.data()[k];
        EXPECT_NEAR(variation_inner(v, w), hs, 1e-11 * variation_norm(v) * variation_norm(w));
    }
}

TEST(Tangent, MatchesOracleAndIsLinear) {
    Rng rng(5);
    auto p = sample_point(rng, {3, 4, 3}, {2, 3, 2}, {1, 2, 2, 1});
    auto v = project_gauge(p, random_variation(p, rng));
    auto w = project_gauge(p, random_variation(p, rng));
    EXPECT_LT(oracle::rel(oracle::tangent(p, v), tangent_to_dense(p, v)), 1e-12);
    auto lin = tangent_to_dense(p, variation_axpy(2.0, v, -3.0, w));
    auto ref = 2.0 * tangent_to_dense(p, v) + (-3.0) * tangent_to_dense(p, w);
    EXPECT_LT(oracle::rel(ref, lin), 1e-12);
}

TEST(Tangent, CoreVariationIsDerivativeOfContraction) {
    Rng rng(6);
    auto p = sample_point(rng, {3, 4, 3}, {2, 2, 2}, {1, 2, 2, 1});
    for (std::size_t i = 0; i < 3; ++i) {
        auto v = zero_variation(p);
        for (double& x : v.dG[i].data) x = rng.normal();
        auto curve = [&](double s) {
            std::vector<Core3> cores;
            for (std::size_t j = 0; j < 3; ++j) {
                Core3 g = j < i ? p.P[j] : (j == i ? p.Gt[j] : p.Q[j]);
                if (j == i)
                    for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] += s * v.dG[i].data[k];
                cores.push_back(g);
            }
            return oracle::contract(p.U, cores);
        };
        double h = 1e-4;
        auto fd = (1.0 / (2 * h)) * (curve(h) - curve(-h));
        EXPECT_LT(oracle::rel(fd, tangent_to_dense(p, v)), 1e-9);
    }
}

TEST(Tangent, DoubledWithPointAddsPoint) {
    Rng rng(7);
    auto p = sample_point(rng, {3, 4, 3}, {2, 2, 2}, {1, 2, 2, 1});
    auto v = project_gauge(p, random_variation(p, rng));
    auto ref = contract_full(p.as_t3()) + tangent_to_dense(p, v);
    EXPECT_LT(oracle::rel(ref, contract_full(tangent_to_doubled(p, v, true))), 1e-12);
}

TEST(Retraction, ZeroStepAndSecondOrderError) {
    Rng rng(8);
    auto p = sample_point(rng, {4, 3, 4}, {2, 2, 2}, {1, 2, 2, 1});
    auto x = contract_full(p.as_t3());
    EXPECT_LT(oracle::rel(x, contract_full(retract(p, zero_variation(p)))), 1e-12);

    auto v = project_gauge(p, random_variation(p, rng));
    auto dv = tangent_to_dense(p, v);
    std::vector<double> hs, errs;
    for (double s : {1e-1, 5e-2, 2.5e-2, 1.25e-2, 6.25e-3}) {
        auto r = retract(p, variation_axpy(s, v, 0.0, v));
        auto err = hs_norm(contract_full(r) - (x + s * dv));
        hs.push_back(s);
        errs.push_back(err);
    }
    EXPECT_GE(oracle::loglog_slope(hs, errs), 1.9);
    auto r = retract(p, v);
    EXPECT_EQ(r.tucker_ranks(), p.n);
    EXPECT_EQ(r.tt_ranks(), p.r);
}

TEST(ManifoldDimension, MatchesTangentRank) {
    Rng rng(9);
    struct Case {
        std::vector<Index> dims, n, r;
    };
    for (const auto& c : {Case{{3, 4, 3}, {2, 2, 2}, {1, 2, 2, 1}}, Case{{3, 3}, {2, 2}, {1, 2, 1}},
                          Case{{4, 3, 3, 2}, {2, 2, 2, 2}, {1, 2, 3, 2, 1}}, Case{{5}, {1}, {1, 1}}}) {
        auto p = sample_point(rng, c.dims, c.n, c.r);
        auto z = zero_variation(p);
        std::vector<DenseTensor> cols;
        auto push = [&](const GaugedVariation& v) { cols.push_back(tangent_to_dense(p, project_gauge(p, v))); };
        for (std::size_t i = 0; i < z.dU.size(); ++i)
            for (Index k = 0; k < z.dU[i].size(); ++k) {
                auto v = z;
                v.dU[i].data()[k] = 1.0;
                push(v);
            }
        for (std::size_t i = 0; i < z.dG.size(); ++i)
            for (std::size_t k = 0; k < z.dG[i].data.size(); ++k) {
                auto v = z;
                v.dG[i].data[k] = 1.0;
                push(v);
            }
        Matrix a(static_cast<Index>(cols[0].data().size()), static_cast<Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j)
            for (std::size_t k = 0; k < cols[j].data().size(); ++k) a(static_cast<Index>(k), static_cast<Index>(j)) = cols[j].data()[k];
        Eigen::JacobiSVD<Matrix> svd(a);
        Index rank = 0;
        for (Index k = 0; k < svd.singularValues().size(); ++k) rank += svd.singularValues()[k] > 1e-10 * svd.singularValues()[0];
        EXPECT_EQ(rank, manifold_dimension(c.dims, c.n, c.r));
    }
}

TEST(Perturb, DeterministicAndSmall) {
    Rng rng(10);
    auto t = TuckerTensorTrain::random({3, 3}, {2, 2}, {1, 2, 1}, rng);
    auto a = perturb(t, 1e-6, 42), b = perturb(t, 1e-6, 42);
    EXPECT_EQ(contract_full(a).data(), contract_full(b).data());
    EXPECT_LT(oracle::rel(contract_full(t), contract_full(a)), 1e-4);
}

TEST(Variation, MismatchedBaseThrows) {
    Rng rng(11);
    auto p = sample_point(rng, {3, 3}, {2, 2}, {1, 2, 1});
    auto q = sample_point(rng, {3, 3}, {2, 2}, {1, 2, 1});
    EXPECT_THROW(variation_inner(zero_variation(p), zero_variation(q)), std::invalid_argument);
}
