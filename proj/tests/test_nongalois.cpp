#include <gtest/gtest.h>

#include <cmath>

#include "clmeasure/nongalois.hpp"

using namespace clm;

namespace {

const Rational kTol(1, 1000000000000000L);

}  // namespace

TEST(Ratios, C7TableForUnitRankOne) {
    const auto rep = ip_ratio_report(1);
    ASSERT_EQ(rep.rows.size(), 4u);
    EXPECT_EQ(rep.rows[0].ours, QNum(1));
    EXPECT_EQ(rep.rows[1].ours, QNum(ratio(7, 8)));
    EXPECT_EQ(rep.rows[2].ours, QNum(ratio(7, 8)));
    const Rational r = ratio(63, 64);
    EXPECT_EQ(rep.rows[3].ours, QNum(Rational(8 * r * r)));
    ASSERT_TRUE(rep.rows[3].malle.has_value());
    EXPECT_EQ(*rep.rows[3].malle, QNum(Rational(6 * (1 - qpow(2, -12)))));
    EXPECT_FALSE(rep.agree);
    EXPECT_EQ(ratio_json(rep)["verdict"], "disagree");
}

TEST(Ratios, C7TableForUnitRankTwo) {
    const auto rep = ip_ratio_report(2);
    EXPECT_EQ(rep.rows[1].ours, QNum(ratio(63, 64)));
    EXPECT_EQ(rep.rows[2].ours, rep.rows[1].ours);
    const Rational r = ratio(511, 512);
    EXPECT_EQ(rep.rows[3].ours, QNum(Rational(8 * r * r)));
    EXPECT_THROW(ip_ratio_report(0), std::invalid_argument);
    const std::string csv = ratio_csv(rep);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "module,ours_exact,ours_decimal,malle_exact,malle_decimal");
}

TEST(Ratios, AgreementCriterion) {
    for (long p : {2L, 3L, 5L, 7L})
        for (long d = 1; d <= 6; ++d)
            for (int eps : {-1, 0, 1}) {
                // p^{(1-eps) d / 2} = d, checked in floating point
                const double lhs = std::pow(static_cast<double>(p), (1 - eps) * d / 2.0);
                const bool want = std::abs(lhs - static_cast<double>(d)) < 1e-9;
                EXPECT_EQ(malle_agrees(p, d, eps), want) << p << " " << d << " " << eps;
            }
    EXPECT_TRUE(malle_agrees(3, 1, 1));
    EXPECT_TRUE(malle_agrees(2, 2, 0));
    EXPECT_TRUE(malle_agrees(2, 4, 0));
    EXPECT_FALSE(malle_agrees(2, 3, 0));
    EXPECT_THROW(malle_agrees(4, 1, 1), std::invalid_argument);
}

TEST(Ratios, WeightsProportionalExactlyWhenCriterionHolds) {
    for (long p : {2L, 3L})
        for (long d : {1L, 2L, 3L, 4L})
            for (int eps : {0, 1}) {
                const long q = ipow(p, static_cast<unsigned long>(d)).get_si();
                const QNum base = ours_weight(q, eps, 1, 1, Partition()) / malle_weight(q, d, 1, 1, Partition());
                bool proportional = true;
                for (long k = 1; k <= 4; ++k) {
                    const Partition lam{k};
                    const QNum ratio_k = ours_weight(q, eps, 1, 1, lam) / malle_weight(q, d, 1, 1, lam);
                    proportional = proportional && ratio_k == base;
                }
                EXPECT_EQ(proportional, malle_agrees(p, d, eps)) << p << " " << d << " " << eps;
            }
}

TEST(Pushforward, AbsolutelyIrreduciblePairMatchesGeneralFormula) {
    for (long p : {2L, 3L})
        for (int n2 : {1, 2})
            for (int u : {1, 2}) {
                const auto d = ai_pair_decomp(p, n2, u);
                for (const auto& lam : partitions_up_to(4)) {
                    ModuleShape s;
                    s.set(2, lam);
                    const Factored a = ai_pair_factored(p, n2, u, lam), b = pushforward_factored(d, s);
                    EXPECT_EQ(a.exact(), b.exact()) << lam.str();
                    EXPECT_EQ(a.reduced_infinite(), b.reduced_infinite());
                }
            }
}

TEST(Pushforward, RankDistributionIsMarginal) {
    for (long p : {2L, 3L}) {
        double total = 0;
        for (long rank = 0; rank <= 12; ++rank) {
            const double want = ai_rank_prob(p, 1, 1, rank, kTol).mid().get_d();
            total += want;
            if (rank > 3) continue;
            double s = 0;
            for (long t = rank; t <= rank + 16; ++t)
                for (const auto& lam : partitions_of(t, std::numeric_limits<long>::max(), rank))
                    if (lam.first() == rank) s += ai_pair_prob(p, 1, 1, lam, kTol).mid().get_d();
            EXPECT_NEAR(s, want, 1e-9) << p << " " << rank;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(Pushforward, InvariantComponentsAndSizes) {
    auto d = make_decomp(GroupSpec::cyclic(7), 2, 1, 1);
    for (auto& c : d.components) {
        c.n = 2;
        c.m = 1;
    }
    ModuleShape s;
    s.set(2, Partition{1});
    s.set(3, Partition{2});
    EXPECT_EQ(invariant_components(d).size(), 2u);
    EXPECT_EQ(invariant_module_size(d, s), Integer(8) * 64);
    EXPECT_EQ(size_from_invariants(d, s), Integer(64) * 4096);  // |e_i V| = |e_i U|^2
    const auto lv = pushforward_levels(d, s);
    EXPECT_EQ(lv.at(2), 2);
    EXPECT_EQ(lv.at(3), 2);
    EXPECT_GT(pushforward_prob(d, s, kTol).lo(), 0);

    d.components[0].m = 0;
    d.components[1].m = 0;
    EXPECT_THROW(pushforward_factored(d, ModuleShape()), std::invalid_argument);

    auto e = make_decomp(GroupSpec({2, 2}), 3, 1, 1);
    e.components[0].m = 0;
    ModuleShape bad;
    bad.set(2, Partition{1});
    EXPECT_THROW(pushforward_factored(e, bad), std::invalid_argument);
    ModuleShape ok;
    ok.set(3, Partition{1});
    EXPECT_GT(pushforward_prob(e, ok, kTol).lo(), 0);
}

TEST(Pushforward, ZeroMultiplicityComponentsAreIgnoredInTheMass) {
    auto e = make_decomp(GroupSpec({2, 2}), 3, 1, 1);
    e.components[0].m = 0;
    e.components[2].m = 0;
    double s = 0;
    for (long t = 0; t <= 18; ++t)
        for (const auto& lam : partitions_of(t)) {
            ModuleShape x;
            x.set(3, lam);
            s += pushforward_prob(e, x, kTol).mid().get_d();
        }
    EXPECT_NEAR(s, 1.0, 1e-7);
}
