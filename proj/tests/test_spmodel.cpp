#include <gtest/gtest.h>

#include <set>

#include "clmeasure/spmodel.hpp"

using namespace clm;

namespace {

using IMat = std::vector<std::vector<Integer>>;

// diagonal of the Smith normal form over Z (nonzero entries only)
std::vector<Integer> smith_diagonal(IMat a) {
    const size_t m = a.size(), n = a.empty() ? 0 : a[0].size();
    std::vector<Integer> diag;
    for (size_t t = 0; t < std::min(m, n); ++t) {
        // move a nonzero entry of least absolute value to (t, t), then clear its row and column
        while (true) {
            size_t bi = m, bj = n;
            for (size_t i = t; i < m; ++i)
                for (size_t j = t; j < n; ++j)
                    if (a[i][j] != 0 && (bi == m || abs(a[i][j]) < abs(a[bi][bj]))) bi = i, bj = j;
            if (bi == m) return diag;
            std::swap(a[t], a[bi]);
            for (auto& row : a) std::swap(row[t], row[bj]);
            bool clean = true;
            for (size_t i = t + 1; i < m; ++i) {
                Integer f = a[i][t] / a[t][t];
                for (size_t j = t; j < n; ++j) a[i][j] -= f * a[t][j];
                if (a[i][t] != 0) clean = false;
            }
            for (size_t j = t + 1; j < n; ++j) {
                Integer f = a[t][j] / a[t][t];
                for (size_t i = t; i < m; ++i) a[i][j] -= f * a[i][t];
                if (a[t][j] != 0) clean = false;
            }
            if (!clean) continue;
            // divisibility condition: fold in any entry not divisible by the pivot
            bool divides = true;
            for (size_t i = t + 1; i < m && divides; ++i)
                for (size_t j = t + 1; j < n; ++j)
                    if (a[i][j] % a[t][t] != 0) {
                        for (size_t c = t; c < n; ++c) a[t][c] += a[i][c];
                        divides = false;
                        break;
                    }
            if (divides) break;
        }
        diag.push_back(abs(a[t][t]));
    }
    return diag;
}

// cokernel of B over Z/p^k as Z^n / (B Z^n + p^k Z^n)
Partition snf_exponents(const MatrixModPk& b) {
    const int n = b.size();
    IMat a(static_cast<size_t>(n), std::vector<Integer>(static_cast<size_t>(2 * n), 0));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) a[static_cast<size_t>(i)][static_cast<size_t>(j)] = Integer(static_cast<long>(b(i, j)));
        a[static_cast<size_t>(i)][static_cast<size_t>(n + i)] = Integer(static_cast<long>(b.modulus()));
    }
    std::vector<long> ex;
    for (const Integer& d : smith_diagonal(a)) {
        long v = 0;
        Integer x = d;
        while (x % b.p() == 0) {
            x /= b.p();
            ++v;
        }
        if (v > 0) ex.push_back(v);
    }
    return Partition::from_unsorted(ex);
}

MatrixModPk random_matrix(long p, long k, int n, KeyedStream& rng, bool singularish) {
    MatrixModPk m(p, k, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            auto x = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(m.modulus())));
            if (singularish) x = m.reduce(x * p * static_cast<std::int64_t>(rng.below(2)));
            m(i, j) = x;
        }
    return m;
}

long kernel_size(const MatrixModPk& b) {
    const int n = b.size();
    const std::int64_t mod = b.modulus();
    long total = 1;
    for (int i = 0; i < n; ++i) total *= mod;
    long count = 0;
    for (long code = 0; code < total; ++code) {
        std::vector<std::int64_t> x(static_cast<size_t>(n));
        long c = code;
        for (int i = 0; i < n; ++i, c /= mod) x[static_cast<size_t>(i)] = c % mod;
        bool zero = true;
        for (int i = 0; i < n && zero; ++i) {
            std::int64_t s = 0;
            for (int j = 0; j < n; ++j) s += b(i, j) * x[static_cast<size_t>(j)];
            zero = s % mod == 0;
        }
        if (zero) ++count;
    }
    return count;
}

std::vector<std::int64_t> flat(const MatrixModPk& m) {
    std::vector<std::int64_t> v;
    for (int i = 0; i < m.size(); ++i)
        for (int j = 0; j < m.size(); ++j) v.push_back(m(i, j));
    return v;
}

// SL_2(Z/N) by enumeration
std::set<std::vector<std::int64_t>> sl2(std::int64_t N) {
    std::set<std::vector<std::int64_t>> out;
    for (std::int64_t a = 0; a < N; ++a)
        for (std::int64_t b = 0; b < N; ++b)
            for (std::int64_t c = 0; c < N; ++c)
                for (std::int64_t d = 0; d < N; ++d)
                    if (((a * d - b * c) % N + N) % N == 1) out.insert({a, b, c, d});
    return out;
}

}  // namespace

TEST(KeyedStream, DeterministicAndBounded) {
    KeyedStream a(42, 7), b(42, 7), c(42, 8);
    for (int i = 0; i < 100; ++i) {
        auto x = a.next();
        EXPECT_EQ(x, b.next());
        EXPECT_NE(x, c.next());
    }
    std::vector<long> hist(6, 0);
    KeyedStream r(1, 0);
    for (int i = 0; i < 60000; ++i) {
        auto v = r.below(6);
        ASSERT_LT(v, 6u);
        ++hist[v];
    }
    for (long h : hist) EXPECT_NEAR(h, 10000, 500);
}

TEST(Symplectic, SamplesAreSymplectic) {
    for (long p : {2L, 3L, 5L})
        for (long r : {1L, 2L, 3L})
            for (int g : {1, 2, 3})
                for (std::uint64_t i = 0; i < 20; ++i) {
                    KeyedStream rng(99, i);
                    auto a = sample_sp(p, r, g, rng);
                    EXPECT_EQ(a.modulus(), ipow(p, static_cast<unsigned long>(r)).get_si());
                    EXPECT_TRUE(is_symplectic(a)) << p << " " << r << " " << g;
                }
}

TEST(Symplectic, LiftedSamplesAreSymplecticModPr) {
    for (std::uint64_t i = 0; i < 50; ++i) {
        KeyedStream rng(5, i);
        auto a = sample_sp_r(3, 1, 3, 2, rng);
        EXPECT_EQ(a.k(), 3);
        EXPECT_TRUE(is_symplectic(a.with_level(1)));
    }
    KeyedStream rng(0, 0);
    EXPECT_THROW(sample_sp_r(2, 2, 1, 1, rng), std::invalid_argument);
}

TEST(Symplectic, UniformOnSmallGroups) {
    // Sp_2 = SL_2; compare frequencies with the enumerated group
    for (auto [p, r] : {std::pair{2L, 1L}, std::pair{3L, 1L}, std::pair{2L, 2L}}) {
        const auto N = ipow(p, static_cast<unsigned long>(r)).get_si();
        const auto group = sl2(N);
        std::map<std::vector<std::int64_t>, long> seen;
        const long per = 400, total = per * static_cast<long>(group.size());
        for (long i = 0; i < total; ++i) {
            KeyedStream rng(2024, static_cast<std::uint64_t>(i));
            ++seen[flat(sample_sp(p, r, 1, rng))];
        }
        EXPECT_EQ(seen.size(), group.size()) << N;
        double chi = 0;
        for (const auto& m : group) {
            const double o = seen.count(m) ? static_cast<double>(seen[m]) : 0.0;
            chi += (o - per) * (o - per) / per;
        }
        const double dof = static_cast<double>(group.size() - 1);
        EXPECT_LT(chi, dof + 6 * std::sqrt(2 * dof)) << N;  // about 6 sigma
    }
}

TEST(Cokernel, MatchesIntegerSmithForm) {
    for (auto [p, k] : {std::pair{2L, 3L}, std::pair{3L, 2L}, std::pair{5L, 2L}, std::pair{2L, 5L}})
        for (int n : {1, 2, 3, 4, 6})
            for (std::uint64_t i = 0; i < 40; ++i) {
                KeyedStream rng(17, i * 31 + static_cast<std::uint64_t>(n));
                auto b = random_matrix(p, k, n, rng, i % 2 == 1);
                EXPECT_EQ(cokernel_exponents(b), snf_exponents(b)) << p << "^" << k << " n=" << n;
            }
}

TEST(Cokernel, KernelAndCokernelHaveEqualOrder) {
    for (auto [p, k] : {std::pair{2L, 2L}, std::pair{3L, 2L}, std::pair{2L, 3L}})
        for (std::uint64_t i = 0; i < 30; ++i) {
            KeyedStream rng(3, i);
            auto b = random_matrix(p, k, 2, rng, i % 3 == 0);
            const Partition e = cokernel_exponents(b);
            EXPECT_EQ(kernel_size(b), ipow(p, static_cast<unsigned long>(e.total())).get_si());
            EXPECT_LE(e.first(), k);
        }
}

TEST(Cokernel, Extremes) {
    EXPECT_EQ(cokernel_exponents(MatrixModPk::identity(3, 2, 4)), Partition());
    EXPECT_EQ(cokernel_exponents(MatrixModPk(3, 2, 4)), Partition({2, 2, 2, 2}));
    EXPECT_EQ(cokernel_shape(MatrixModPk::identity(2, 3, 2)), Partition({3, 3}));
}

TEST(Experiment, DeterministicAcrossWorkers) {
    auto a = run_experiment(3, 1, 2, 2, 3000, 11, 1);
    auto b = run_experiment(3, 1, 2, 2, 3000, 11, 4);
    auto c = run_experiment(3, 1, 2, 2, 3000, 12, 4);
    EXPECT_EQ(histogram_json(a).dump(), histogram_json(b).dump());
    EXPECT_NE(histogram_json(a).dump(), histogram_json(c).dump());
    long total = 0;
    for (const auto& [s, n] : a.counts) total += n;
    EXPECT_EQ(total, 3000);
    EXPECT_THROW(run_experiment(2, 2, 1, 1, 10, 0), std::invalid_argument);
}

TEST(Experiment, TrivialCokernelForGenusOne) {
    // A - I invertible mod 2 for A in SL_2(F_2): exactly the 2 elements of order 3 out of 6
    auto group = sl2(2);
    long good = 0;
    for (const auto& m : group) {
        MatrixModPk a(2, 1, 2);
        a(0, 0) = m[0], a(0, 1) = m[1], a(1, 0) = m[2], a(1, 1) = m[3];
        if (cokernel_shape(a).empty()) ++good;
    }
    EXPECT_EQ(good, 2);
    auto h = run_experiment(2, 1, 1, 1, 30000, 5);
    const double frac = static_cast<double>(h.counts[Partition()]) / 30000.0;
    EXPECT_NEAR(frac, 1.0 / 3.0, 0.02);
}

TEST(Limit, MomentIsExteriorSquareTorsion) {
    for (long p : {2L, 3L})
        for (long r : {1L, 2L})
            for (const auto& ex : partitions_up_to(6)) {
                long w = 0;
                const auto& e = ex.parts();
                for (size_t i = 0; i < e.size(); ++i)
                    for (size_t j = i + 1; j < e.size(); ++j) w += std::min({e[i], e[j], r});
                EXPECT_EQ(limit_moment(p, r, ex), ipow(p, static_cast<unsigned long>(w)));
            }
}

TEST(Limit, ProbabilitiesSumToOne) {
    for (long k : {1L, 2L}) {
        double s = 0;
        for (long t = 0; t <= 24; ++t)
            for (const auto& lam : partitions_of(t, k)) s += limit_prob(3, 1, k, lam.conjugate()).to_double();
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

TEST(Limit, ComparisonStatistics) {
    auto h = run_experiment(3, 1, 2, 4, 20000, 42);
    auto cmp = compare_to_limit(h);
    EXPECT_GT(cmp.p_value, 1e-3);
    EXPECT_LT(cmp.max_abs_z_large, 4);
    auto m = estimate_moment(h, Partition{1});
    EXPECT_EQ(m.limit, 1);
    EXPECT_LT(m.deviation_sigmas, 4);

    // against its own empirical frequencies the statistic vanishes
    std::map<Partition, double> own;
    for (const auto& [s, c] : h.counts) own[s] = static_cast<double>(c) / 20000.0;
    auto self = compare_to_limit(h, &own);
    EXPECT_NEAR(self.chi_square, 0, 1e-9);
    EXPECT_EQ(self.divergence, 0);
}
