#include "oracles.hpp"

#include "t4s/t3.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace t4s;

namespace {

TuckerTensorTrain random_t3(Rng& rng, Index d, Index extent, Index rank) {
    std::vector<Index> shape(static_cast<std::size_t>(d), extent), n(static_cast<std::size_t>(d), rank);
    std::vector<Index> r(static_cast<std::size_t>(d + 1), rank);
    r.front() = r.back() = 1;
    auto rr = remove_useless_ranks(n, r, shape);
    return TuckerTensorTrain::random(shape, rr.n, rr.r, rng);
}

double orth_defect(const Matrix& m) {
    return (m.transpose() * m - Matrix::Identity(m.cols(), m.cols())).norm();
}

}  // namespace

TEST(ContractFull, MatchesOracle) {
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        auto t = random_t3(rng, 2 + trial % 4, 2 + trial % 3, 1 + trial % 3);
        EXPECT_LT(oracle::rel(oracle::contract(t), contract_full(t)), 1e-13);
    }
}

TEST(ContractFull, RankOneUnitCores) {
    Rng rng(2);
    TuckerTensorTrain t;
    std::vector<Vector> vs;
    for (int i = 0; i < 3; ++i) {
        vs.push_back(rng.normal(3 + i));
        t.bases.push_back(vs.back());
        Core3 g(1, 1, 1);
        g.data[0] = 1.0;
        t.tt.cores.push_back(g);
    }
    auto dense = contract_full(t);
    for (Index a = 0; a < 3; ++a)
        for (Index b = 0; b < 4; ++b)
            for (Index c = 0; c < 5; ++c) EXPECT_NEAR(dense({a, b, c}), vs[0][a] * vs[1][b] * vs[2][c], 1e-15);
}

TEST(ContractFull, IdentityBasesGiveBareTrain) {
    Rng rng(3);
    auto tt = TensorTrain::random({3, 4, 2}, {1, 2, 2, 1}, rng);
    EXPECT_EQ(contract_full(TuckerTensorTrain::from_tt(tt)).data(), contract_tt(tt).data());
}

TEST(Orthogonalize, LeftRightAndBases) {
    Rng rng(4);
    auto tt = TensorTrain::random({3, 4, 3, 2}, {1, 2, 3, 2, 1}, rng);
    auto dense = contract_tt(tt);
    auto l = left_orthogonalize(tt);
    for (std::size_t i = 0; i + 1 < l.cores.size(); ++i) EXPECT_LT(orth_defect(l.cores[i].left_unfolding()), 1e-12);
    EXPECT_LT(oracle::rel(dense, contract_tt(l)), 1e-12);
    auto r = right_orthogonalize(tt);
    for (std::size_t i = 1; i < r.cores.size(); ++i)
        EXPECT_LT(orth_defect(Matrix(r.cores[i].right_unfolding().transpose())), 1e-12);
    EXPECT_LT(oracle::rel(dense, contract_tt(r)), 1e-12);
    EXPECT_NEAR(hs_norm(contract_tt(r)), hs_norm(dense), 1e-12 * hs_norm(dense));

    auto t = random_t3(rng, 3, 4, 2);
    auto o = orthogonalize_bases(t);
    for (const auto& u : o.bases) EXPECT_LT(orth_defect(u), 1e-12);
    EXPECT_LT(oracle::rel(contract_full(t), contract_full(o)), 1e-12);

    auto single = TensorTrain::random({5}, {1, 1}, rng);
    EXPECT_LT(oracle::rel(contract_tt(single), contract_tt(left_orthogonalize(single))), 1e-15);
}

TEST(T3SvdDense, RankOneAndFullRoundTrip) {
    Rng rng(5);
    Vector a = rng.normal(3), b = rng.normal(4), c = rng.normal(2);
    DenseTensor r1({3, 4, 2});
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 4; ++j)
            for (Index k = 0; k < 2; ++k) r1({i, j, k}) = a[i] * b[j] * c[k];
    auto res = t3_svd_dense(r1);
    EXPECT_EQ(res.t3.tucker_ranks(), (std::vector<Index>{1, 1, 1}));
    EXPECT_EQ(res.t3.tt_ranks(), (std::vector<Index>{1, 1, 1, 1}));

    auto t = DenseTensor::random({4, 4, 4}, rng);
    EXPECT_LE(oracle::rel(t, contract_full(t3_svd_dense(t).t3)), 1e-12);
}

TEST(T3SvdDense, ErrorBoundedByDiscardedTails) {
    Rng rng(6);
    auto a = symmetrize_inputs(DenseTensor::random({5, 5, 5, 3}, rng), 3);
    Matrix c = Matrix::Zero(5, 5);
    for (Index i = 0; i < 5; ++i) c(i, i) = std::pow(i + 1.0, -2.0);
    auto t = precondition(a, c, 3);
    auto full = t3_svd_dense(t);
    for (Index rank = 1; rank <= 3; ++rank) {
        auto tr = t3_svd_dense(t, Truncation::ranks({rank, rank, rank, rank}, {1, rank, rank, rank, 1}));
        double err2 = hs_norm(t - contract_full(tr.t3));
        err2 *= err2;
        double tails = 0.0;
        auto add_tail = [&](const Vector& s, Index keep) {
            for (Index i = keep; i < s.size(); ++i) tails += s[i] * s[i];
        };
        auto n = tr.t3.tucker_ranks();
        auto r = tr.t3.tt_ranks();
        for (std::size_t i = 0; i < 4; ++i) add_tail(tr.spectrum.tucker[i], n[i]);
        for (std::size_t i = 0; i < 3; ++i) add_tail(tr.spectrum.tt[i], r[i + 1]);
        EXPECT_LE(err2, tails * (1 + 1e-10) + 1e-28);
    }
}

TEST(T3SvdImplicit, SingularValuesMatchDense) {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        Index d = 2 + trial % 4, extent = 2 + trial % 5, rank = 1 + trial % 4;
        auto t = random_t3(rng, d, extent, rank);
        auto dense = t3_svd_dense(contract_full(t)).spectrum;
        auto impl = t3_svd_implicit(t).spectrum;
        auto check = [&](const Vector& a, const Vector& b, Index keep) {
            for (Index i = 0; i < keep; ++i) EXPECT_NEAR(a[i], b[i], 1e-10 * b[i]);
            for (Index i = keep; i < a.size(); ++i) EXPECT_LT(a[i], 1e-12 * a[0]);
        };
        auto n = t.tucker_ranks();
        auto r = t.tt_ranks();
        for (std::size_t i = 0; i < n.size(); ++i) check(impl.tucker[i], dense.tucker[i], n[i]);
        for (std::size_t i = 0; i + 1 < n.size(); ++i) check(impl.tt[i], dense.tt[i], r[i + 1]);
    }
}

TEST(T3SvdImplicit, PaddingIsRemovedAndTruncationMatchesDroppedValue) {
    Rng rng(8);
    auto t = random_t3(rng, 3, 4, 2);
    auto padded = zero_pad_ranks(t, {3, 3, 3}, {1, 3, 3, 1});
    auto res = t3_svd_implicit(padded);
    ASSERT_EQ(res.spectrum.tucker[0].size(), 3);
    EXPECT_LT(res.spectrum.tucker[0][2], 1e-12 * res.spectrum.tucker[0][0]);
    ASSERT_EQ(res.spectrum.tt[1].size(), 3);
    EXPECT_LT(res.spectrum.tt[1][2], 1e-12 * res.spectrum.tt[1][0]);
    EXPECT_EQ(res.t3.tucker_ranks(), t.tucker_ranks());
    EXPECT_EQ(res.t3.tt_ranks(), t.tt_ranks());
    EXPECT_LT(oracle::rel(contract_full(t), contract_full(res.t3)), 1e-12);

    auto u = random_t3(rng, 3, 4, 3);
    auto n = u.tucker_ranks();
    auto r = u.tt_ranks();
    auto r2 = r;
    r2[2] -= 1;
    auto cut = t3_svd_implicit(u, Truncation::ranks(n, r2));
    double err = hs_norm(contract_full(u) - contract_full(cut.t3));
    double dropped = cut.spectrum.tt[1][r2[2]];
    EXPECT_GE(err, dropped * (1 - 1e-8));
    double bound = 0.0;
    for (std::size_t i = 0; i < cut.spectrum.tt.size(); ++i)
        for (Index j = cut.t3.tt_ranks()[i + 1]; j < cut.spectrum.tt[i].size(); ++j)
            bound += cut.spectrum.tt[i][j] * cut.spectrum.tt[i][j];
    for (std::size_t i = 0; i < cut.spectrum.tucker.size(); ++i)
        for (Index j = cut.t3.tucker_ranks()[i]; j < cut.spectrum.tucker[i].size(); ++j)
            bound += cut.spectrum.tucker[i][j] * cut.spectrum.tucker[i][j];
    EXPECT_LE(err, std::sqrt(bound) * (1 + 1e-8));
}

TEST(T3SvdImplicit, TighterToleranceNeverWorse) {
    Rng rng(9);
    auto t = random_t3(rng, 4, 5, 4);
    auto dense = contract_full(t);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.5, 0.2, 0.1, 0.05, 0.01, 1e-3, 1e-8}) {
        double err = hs_norm(dense - contract_full(t3_svd_implicit(t, Truncation::tolerance(eps)).t3));
        EXPECT_LE(err, prev * (1 + 1e-10) + 1e-14);
        prev = err;
    }
}

TEST(SymTT, ExactForSymmetricInput) {
    Rng rng(10);
    auto sym = symmetrize_inputs(DenseTensor::random({4, 4, 4, 3}, rng), 3);
    auto t3 = t3_svd_dense(sym).t3;
    TensorTrain tt;
    for (std::size_t i = 0; i < 4; ++i) tt.cores.push_back(t3.tt.cores[i].mid_product(t3.bases[i]));
    auto out = sym_tt_to_t3(tt, 3);
    EXPECT_LT(oracle::rel(sym, contract_full(out)), 1e-12);
    auto n = out.tucker_ranks();
    EXPECT_EQ(n[0], n[1]);
    EXPECT_EQ(n[1], n[2]);
    EXPECT_LT(measured_asymmetry(tt, 3), 1e-12);
}

TEST(SymTT, OrderOneAlwaysExact) {
    Rng rng(11);
    auto tt = TensorTrain::random({5, 3}, {1, 2, 1}, rng);
    EXPECT_LT(oracle::rel(contract_tt(tt), contract_full(sym_tt_to_t3(tt, 1))), 1e-12);
}

TEST(SymTT, ErrorGrowsWithAsymmetry) {
    Rng rng(12);
    auto base = symmetrize_inputs(DenseTensor::random({3, 3, 2}, rng), 2);
    auto noise = DenseTensor::random({3, 3, 2}, rng);
    double prev = 0.0;
    for (double eps : {1e-8, 1e-6, 1e-4}) {
        auto t = base + eps * noise;
        auto t3 = t3_svd_dense(t).t3;
        TensorTrain tt;
        for (std::size_t i = 0; i < 3; ++i) tt.cores.push_back(t3.tt.cores[i].mid_product(t3.bases[i]));
        double err = oracle::rel(contract_tt(tt), contract_full(sym_tt_to_t3(tt, 2)));
        EXPECT_LE(err, 100 * eps);
        EXPECT_GE(err + 1e-15, prev * 0.5);
        prev = err;
    }
}

TEST(ZeroPad, PreservesTensorAndRoundsBack) {
    Rng rng(13);
    auto t = random_t3(rng, 3, 4, 2);
    EXPECT_EQ(contract_full(zero_pad_ranks(t, t.tucker_ranks(), t.tt_ranks())).data(), contract_full(t).data());
    auto n = t.tucker_ranks();
    auto r = t.tt_ranks();
    for (auto& x : n) ++x;
    for (std::size_t i = 1; i + 1 < r.size(); ++i) ++r[i];
    auto p = zero_pad_ranks(t, n, r);
    EXPECT_EQ(p.tucker_ranks(), n);
    EXPECT_EQ(p.tt_ranks(), r);
    EXPECT_LT(oracle::rel(contract_full(t), contract_full(p)), 1e-14);
    auto back = t3_svd_implicit(p).t3;
    EXPECT_EQ(back.tucker_ranks(), t.tucker_ranks());
    EXPECT_EQ(back.tt_ranks(), t.tt_ranks());
}

TEST(UselessRanks, Examples) {
    EXPECT_EQ(remove_useless_ranks({1, 1, 1}, {1, 1, 1, 1}, {4, 4, 4}), (RankPair{{1, 1, 1}, {1, 1, 1, 1}}));
    auto m = remove_useless_ranks({3, 2}, {1, 5, 1}, {3, 2});
    EXPECT_EQ(m.r[1], 2);

    auto c = remove_useless_ranks({4, 4, 4}, {1, 20, 20, 1}, {4, 4, 4});
    EXPECT_LE(c.r[1], 4);
    EXPECT_LE(c.r[2], 4);
    Rng rng(14);
    auto t = DenseTensor::random({4, 4, 4}, rng);
    auto res = t3_svd_dense(t, Truncation::ranks(c.n, c.r));
    EXPECT_EQ(res.t3.tucker_ranks(), c.n);
    EXPECT_EQ(res.t3.tt_ranks(), c.r);
    EXPECT_EQ(remove_useless_ranks(c.n, c.r, {4, 4, 4}), c);
}

TEST(UselessRanks, Idempotent) {
    Rng rng(15);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t d = 2 + static_cast<std::size_t>(trial % 4);
        std::vector<Index> dims, n, r(d + 1, 1);
        for (std::size_t i = 0; i < d; ++i) {
            dims.push_back(1 + static_cast<Index>(rng.next() % 6));
            n.push_back(1 + static_cast<Index>(rng.next() % 8));
        }
        for (std::size_t i = 1; i < d; ++i) r[i] = 1 + static_cast<Index>(rng.next() % 10);
        auto once = remove_useless_ranks(n, r, dims);
        EXPECT_EQ(remove_useless_ranks(once.n, once.r, dims), once);
    }
}

TEST(Serialization, BinaryAndJsonRoundTrip) {
    Rng rng(16);
    auto t = random_t3(rng, 3, 4, 2);
    std::stringstream ss;
    write_t3(ss, t);
    auto back = read_t3(ss);
    EXPECT_EQ(contract_full(back).data(), contract_full(t).data());
    auto js = t3_from_json(t3_to_json(t));
    EXPECT_EQ(contract_full(js).data(), contract_full(t).data());

    std::string bytes;
    {
        std::stringstream s2;
        write_t3(s2, t);
        bytes = s2.str();
    }
    bytes[0] = 'X';
    std::stringstream bad(bytes);
    EXPECT_ANY_THROW(read_t3(bad));
}
