#include <gtest/gtest.h>

#include "clmeasure/moments.hpp"

using namespace clm;

namespace {

ModuleShape one(int id, const Partition& lam) {
    ModuleShape s;
    s.set(id, lam);
    return s;
}

// |wedge^2(G)[p^r]| for G = sum Z/p^{a_i}, straight from the cyclic decomposition
long wedge_exponent(const Partition& lam, long r) {
    const auto ex = lam.conjugate().parts();
    long w = 0;
    for (size_t i = 0; i < ex.size(); ++i)
        for (size_t j = i + 1; j < ex.size(); ++j) w += std::min({ex[i], ex[j], r});
    return w;
}

}  // namespace

TEST(Moments, SmallExamples) {
    const auto c3 = make_decomp(GroupSpec::cyclic(3), 2, 1, 1);
    EXPECT_EQ(moment(c3, one(2, Partition{1})), QNum(ratio(1, 2)));
    EXPECT_EQ(moment(c3, ModuleShape()), QNum(1));
    const auto c7 = make_decomp(GroupSpec::cyclic(7), 2, 1, 1);
    ModuleShape s;
    s.set(2, Partition{1});
    s.set(3, Partition{1});
    EXPECT_EQ(moment(c7, s), QNum(ratio(1, 8)));  // 8 / 64
}

TEST(Moments, MatchesExplicitExteriorSquare) {
    // real characters of an elementary abelian group, q = p, eps = 1
    for (int u : {1, 2})
        for (int r : {1, 2}) {
            const auto d = make_decomp(GroupSpec({2, 2}), 3, r, u);
            for (const auto& a : partitions_up_to(4))
                for (const auto& b : partitions_up_to(2)) {
                    ModuleShape s;
                    s.set(2, a);
                    s.set(3, b);
                    const long w = wedge_exponent(a, r) + wedge_exponent(b, r);
                    const Rational want = qpow(3, w - static_cast<long>(u) * (a.total() + b.total()));
                    EXPECT_EQ(moment(d, s), QNum(want)) << a.str() << b.str();
                }
        }
}

TEST(Moments, ReconstructionConvergesToLevelMeasure) {
    const auto d = make_decomp(GroupSpec::cyclic(3), 2, 2, 1);
    const auto vr = v_reconstruct(d, {{2, 1}}, ModuleShape(), 10);
    const double want = nu_level(d, {{2, 1}}, ModuleShape()).mid().get_d();
    EXPECT_EQ(vr.layers.at(0), 1);
    EXPECT_EQ(vr.layers.at(1), ratio(5, 6));
    EXPECT_NEAR(vr.partial.get_d(), want, 1e-6);
    const auto diffs = vr.differences();
    for (size_t e = 1; e < diffs.size(); ++e) EXPECT_LT(diffs[e], diffs[e - 1]);
}

TEST(Moments, ReconstructionForSeveralLevels) {
    for (auto [n, p, r] : {std::tuple{3L, 2L, 1}, std::tuple{7L, 2L, 1}, std::tuple{2L, 3L, 1}}) {
        const auto d = make_decomp(GroupSpec::cyclic(n), p, r, 1);
        LevelSpec k;
        for (const auto& c : d.components) k[c.id] = 2;
        for (const auto& lam : partitions_up_to(2, 2)) {
            ModuleShape s = one(d.components[0].id, lam);
            const auto vr = v_reconstruct(d, k, s, 8);
            EXPECT_NEAR(vr.partial.get_d(), nu_level(d, k, s).mid().get_d(), 1e-4) << n << lam.str();
        }
    }
    const auto d = make_decomp(GroupSpec::cyclic(3), 2, 1, 1);
    EXPECT_THROW(v_reconstruct(d, {{2, 1}}, one(2, Partition{2, 1}), 3), std::invalid_argument);
    EXPECT_THROW(v_reconstruct(d, {{2, 1}}, ModuleShape(), -1), std::invalid_argument);
}

TEST(Moments, MomentCheckResidualShrinks) {
    const auto d = make_decomp(GroupSpec::cyclic(3), 2, 1, 1);
    const auto table = measure_table(d, Integer(1) << 14);
    for (const auto& lam : partitions_up_to(3)) {
        const ModuleShape t = one(2, lam);
        if (module_size(d, t) > 256) continue;
        Rational prev(-1);
        for (long b : {10L, 12L, 14L}) {
            auto rep = moment_check(d, table, t, Integer(1) << b);
            EXPECT_TRUE(rep.residual_lo <= rep.residual_hi);
            EXPECT_GE(rep.residual_hi, 0);  // partial sums of a positive series stay below the moment
            if (prev >= 0) {
                EXPECT_LT(rep.residual_hi, prev);
            }
            prev = rep.residual_hi;
        }
        EXPECT_LT(prev, Rational(moment(d, t).rational() / 100));
    }
}

TEST(Moments, MomentCheckRejectsSmallBound) {
    const auto d = make_decomp(GroupSpec::cyclic(3), 2, 1, 1);
    EXPECT_THROW(moment_check(d, one(2, Partition{2}), 8), std::invalid_argument);
    auto rep = moment_check(d, one(2, Partition{1}), 64);
    auto j = report_json(d, rep);
    for (const char* key : {"target", "bound", "moment", "partial_sum", "residual_hi"}) EXPECT_TRUE(j.contains(key));
    EXPECT_EQ(j["moment"], "1/2");
}
