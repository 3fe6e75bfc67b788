#include "oracles.hpp"

#include "t4s/experiments.hpp"
#include "t4s/probing.hpp"
#include "t4s/symbolic.hpp"
#include "t4s/training_data.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace t4s;

namespace {

double factorial(int j) {
    double f = 1;
    for (int i = 2; i <= j; ++i) f *= i;
    return f;
}

}  // namespace

TEST(Multiset, BasicOperations) {
    Multiset a = ms_from_labels({0, 0, 2});
    EXPECT_EQ(ms_size(a), 3);
    EXPECT_EQ(ms_count(a, 0), 2);
    EXPECT_EQ(ms_lattice_size(a), 6u);
    auto lat = ms_lattice(a);
    ASSERT_EQ(lat.size(), 6u);
    EXPECT_EQ(lat.front(), Multiset{0});
    EXPECT_EQ(lat.back(), a);
    for (std::size_t i = 1; i < lat.size(); ++i) EXPECT_LE(ms_size(lat[i - 1]), ms_size(lat[i]));
    EXPECT_EQ(ms_minus(a, ms_from_labels({0})), ms_from_labels({0, 2}));
    EXPECT_TRUE(ms_contains(a, ms_from_labels({0, 2})));
    EXPECT_FALSE(ms_contains(a, ms_from_labels({2, 2})));
    EXPECT_EQ(ms_labels(a), (std::vector<int>{0, 0, 2}));
}

TEST(Symbolic, SecondDerivativeAlongRepeatedDirection) {
    auto f = formula_for(FormulaKind::Output, ms_add(0, 0, 2));
    ASSERT_EQ(f.size(), 4u);
    Multiset one = ms_add(0, 0, 1), two = ms_add(0, 0, 2);
    std::map<std::tuple<Multiset, std::vector<Multiset>>, std::uint64_t> got;
    for (const auto& [t, c] : f) {
        EXPECT_EQ(t.tag, Tag::Q);
        got[{t.mu, t.gamma}] = c;
    }
    EXPECT_EQ((got[{two, {}}]), 1u);
    EXPECT_EQ((got[{one, {one}}]), 2u);
    EXPECT_EQ((got[{0, {one, one}}]), 1u);
    EXPECT_EQ((got[{0, {two}}]), 1u);
}

TEST(Symbolic, TermCountsMatchTable) {
    for (int j = 1; j <= 8; ++j) {
        EXPECT_EQ(formula_size(FormulaKind::Output, ms_add(0, 0, j)), CountReference::terms_sym[static_cast<std::size_t>(j - 1)]);
        std::vector<int> labels;
        for (int i = 0; i < j; ++i) labels.push_back(i);
        EXPECT_EQ(formula_size(FormulaKind::Output, ms_from_labels(labels)), CountReference::terms_asym[static_cast<std::size_t>(j - 1)]);
    }
}

TEST(CountTable, LiveCountersMatch) {
    auto report = run_deriv_verify(kTableOrders, 3);
    ASSERT_EQ(report.rows.size(), static_cast<std::size_t>(kTableOrders));
    for (const auto& m : report.mismatches) ADD_FAILURE() << m;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        EXPECT_EQ(report.rows[i].fwd_sym, CountReference::fwd_sym[i]);
        EXPECT_EQ(report.rows[i].fwd_asym, CountReference::fwd_asym[i]);
        EXPECT_EQ(report.rows[i].rev_sym, CountReference::rev_sym[i]);
        EXPECT_EQ(report.rows[i].rev_asym, CountReference::rev_asym[i]);
    }
}

TEST(ForwardProbe, MatchesFiniteDifferences) {
    auto map = builtin_test_map(6, 4, 11);
    Rng rng(1);
    Vector theta0 = 0.1 * rng.normal(6);
    auto base = make_base_point(*map, theta0);
    Vector d1 = rng.normal(6).normalized(), d2 = rng.normal(6).normalized();
    oracle::Fn f = [&](const Vector& th) { return map->q(th); };
    for (int j = 1; j <= 4; ++j) {
        auto y = forward_probe(*map, base, {d1}, ms_add(0, 0, j));
        auto fd = oracle::fd_directional(f, theta0, d1, j, 2e-2, j + 3);
        EXPECT_LT(oracle::rel(fd, y), 1e-6) << "order " << j;
    }
    auto mixed = forward_probe(*map, base, {d1, d2}, ms_from_labels({0, 0, 1}));
    auto fd = oracle::fd_mixed(f, theta0, d1, 2, d2, 1, 2e-2, 4);
    EXPECT_LT(oracle::rel(fd, mixed), 1e-6);
}

TEST(ForwardProbe, ResolventSeriesWithoutNonlinearity) {
    BuiltinMapOptions opts;
    opts.gamma = 0.0;
    auto map = builtin_test_map(5, 3, 12, opts);
    Rng rng(2);
    Vector theta0 = 0.1 * rng.normal(5), dir = rng.normal(5);
    auto base = make_base_point(*map, theta0);
    Matrix a = map->M();
    a.diagonal() += theta0;
    Eigen::PartialPivLU<Matrix> lu(a);
    Vector u = lu.solve(map->s());
    Matrix step = -lu.solve(Matrix(dir.asDiagonal()));
    for (int j = 1; j <= 6; ++j) {
        u = step * u;
        Vector ref = factorial(j) * (map->E() * u);
        if (j == 1) ref += map->D() * dir;
        auto y = forward_probe(*map, base, {dir}, ms_add(0, 0, j));
        EXPECT_LT(oracle::rel(ref, y), 1e-11) << "order " << j;
    }
}

TEST(ReverseProbe, ConsistentWithForward) {
    auto map = builtin_test_map(7, 5, 13);
    Rng rng(3);
    Vector theta0 = 0.1 * rng.normal(7);
    auto base = make_base_point(*map, theta0);
    Vector x = rng.normal(7), nu = rng.normal(7), omega = rng.normal(5);
    for (int j = 0; j <= 4; ++j) {
        auto psi = reverse_probe(*map, base, {x, nu}, ms_add(0, 0, j), omega);
        auto y = forward_probe(*map, base, {x, nu}, ms_add(ms_add(0, 0, j), 1, 1));
        EXPECT_NEAR(psi.dot(nu), omega.dot(y), 1e-10 * (std::abs(omega.dot(y)) + 1)) << "order " << j;
    }
}

TEST(ReverseProbe, GradientMatchesFiniteDifference) {
    auto map = builtin_test_map(5, 3, 14);
    Rng rng(4);
    Vector theta0 = 0.1 * rng.normal(5), omega = rng.normal(3);
    auto base = make_base_point(*map, theta0);
    auto psi = reverse_probe(*map, base, {}, 0, omega);
    for (Index i = 0; i < 5; ++i) {
        Vector e = Vector::Unit(5, i);
        oracle::Fn f = [&](const Vector& th) { return map->q(th); };
        auto fd = oracle::fd_directional(f, theta0, e, 1, 1e-3, 3);
        EXPECT_NEAR(psi[i], omega.dot(fd), 1e-8);
    }
}

TEST(ProbeSession, ReusesLowerOrders) {
    auto map = builtin_test_map(6, 4, 15);
    Rng rng(5);
    auto base = make_base_point(*map, Vector::Zero(6));
    ProbeSession s(*map, base, {rng.normal(6)});
    for (int j = 1; j <= 5; ++j) {
        s.forward(ms_add(0, 0, j));
        EXPECT_EQ(s.counters().state, static_cast<std::uint64_t>(j));
    }
}

TEST(TrainingData, DeterministicAndSerializable) {
    auto map = builtin_test_map(6, 4, 16);
    Matrix c = Matrix::Identity(6, 6);
    Vector theta0 = Vector::Zero(6);
    auto a = generate_training_data(map, c, theta0, 3, 5, 99);
    auto b = generate_training_data(map, c, theta0, 3, 5, 99);
    ASSERT_EQ(a.size(), 5u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].x, b[i].x);
        EXPECT_NEAR(a[i].x.norm(), 1.0, 1e-14);
        EXPECT_NEAR(a[i].omega.norm(), 1.0, 1e-14);
        ASSERT_EQ(a[i].max_order(), 3);
        for (int j = 0; j < 3; ++j) {
            EXPECT_EQ(a[i].y[static_cast<std::size_t>(j)], b[i].y[static_cast<std::size_t>(j)]);
            EXPECT_EQ(a[i].psi[static_cast<std::size_t>(j)], b[i].psi[static_cast<std::size_t>(j)]);
        }
    }
    std::stringstream ss;
    write_samples_jsonl(ss, a);
    auto back = read_samples_jsonl(ss);
    ASSERT_EQ(back.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(back[i].seed, a[i].seed);
        EXPECT_EQ(back[i].x, a[i].x);
        for (int j = 0; j < 3; ++j) EXPECT_EQ(back[i].y[static_cast<std::size_t>(j)], a[i].y[static_cast<std::size_t>(j)]);
    }
}

TEST(TrainingData, ProbesAreSymmetricDerivatives) {
    auto map = builtin_test_map(5, 3, 17);
    Matrix c = 0.5 * Matrix::Identity(5, 5);
    Vector theta0 = Vector::Zero(5);
    auto s = generate_training_data(map, c, theta0, 2, 2, 7);
    oracle::Fn f = [&](const Vector& x) { return map->q(theta0 + c * x); };
    for (const auto& p : s) {
        for (int j = 1; j <= 2; ++j) {
            auto fd = oracle::fd_directional(f, Vector::Zero(5), p.x, j, 2e-2, j + 3);
            EXPECT_LT(oracle::rel(fd, p.y[static_cast<std::size_t>(j - 1)]), 1e-6);
        }
    }
}
