#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>

#include "decomp.hpp"
#include "partition.hpp"
#include "partmod.hpp"
#include "qexact.hpp"

namespace clm {

inline const Rational& default_tol() {
    static const Rational t(1, 1000000000000L);
    return t;
}

// r = infinity is only meaningful for the single-ring self-dual measure
inline constexpr long kInfinity = std::numeric_limits<long>::max() / 4;

using LevelSpec = std::map<int, long>;

namespace detail {

inline void require_half_integer(const Rational& x, const char* what) {
    if (!is_integral(2 * x)) throw std::domain_error(what);
}

inline void require_level(const Partition& lam, long k, const char* what) {
    if (k < 0 || lam(k + 1) != 0) throw std::invalid_argument(what);
}

// prod_{i=from}^{to} (1 - q^{-s-i})
inline QNum finite_tail(long q, const Rational& s, long from, long to) {
    QNum r(1);
    for (long i = from; i <= to; ++i) r *= QNum(1) - QNum::qpow_rat(q, -s - i);
    return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// q-series factors

inline QNum pf_unchecked(long q, const Rational& t, long m) {
    require(m >= 0, "pf: m must be >= 0");
    detail::require_half_integer(t, "pf: t must be a half-integer");
    QNum sum(0);
    for (long e = 0; e <= m; ++e) {
        QNum term = QNum::qpow_rat(q, -(t + 1) * e) * QNum(qbinom(q, m, e));
        sum += (e % 2) ? -term : term;
    }
    return sum;
}

inline QNum pf(long q, const Rational& t, long m) {
    require(t >= 0, "pf: t must be >= 0");
    return pf_unchecked(q, t, m);
}

inline Rational pf_closed_zero(long q, long m) {
    require(m >= 0, "pf_closed_zero: m must be >= 0");
    Rational r(1);
    for (long j = 1; j <= (m + 1) / 2; ++j) r *= 1 - qpow(q, -(2 * j - 1));
    return r;
}

namespace detail {

inline void require_qf_domain(long lp, long l, long fp, long f, long s1, long s2) {
    require(lp >= l && fp >= f, "qf: need lambda_prev >= lambda and phi_prev >= phi");
    require(l >= 0 && f >= 0, "qf: parts must be non-negative");
    require(fp - lp <= s1 && lp - fp <= s2, "qf: positivity hypotheses violated");
}

}  // namespace detail

inline Rational qf(long q, long lp, long l, long fp, long f, long s1, long s2) {
    detail::require_qf_domain(lp, l, fp, f, s1, s2);
    Rational sum(0);
    for (long e = 0; e <= lp - l; ++e) {
        for (long g = 0; g <= fp - f; ++g) {
            long L = l + e, F = f + g;
            long ex = binom2(L) - binom2(l) - s1 * L + binom2(F) - binom2(f) - s2 * F + L * F - L * L - F * F;
            Rational term = qpow(q, ex) / (eta(q, e) * eta(q, lp - l - e) * eta(q, g) * eta(q, fp - f - g));
            if ((e + g) % 2) sum -= term;
            else sum += term;
        }
    }
    return sum;
}

inline Rational qbar(long q, long lp, long l, long fp, long f, long s1, long s2) {
    Rational v = qf(q, lp, l, fp, f, s1, s2);
    return v * eta(q, lp - l) * eta(q, fp - f) * qpow(q, l * l + s1 * l + f * f + s2 * f - l * f);
}

inline Factored d_factor_factored(long q, long lam, long phi, long s1, long s2) {
    require(s1 + s2 >= 0, "d_factor: need s1 + s2 >= 0");
    require(lam >= 0 && phi >= 0, "d_factor: ranks must be non-negative");
    if (lam - phi < -s1 || lam - phi > s2) return Factored::zero();
    Rational ex = qpow(q, -lam * lam - phi * phi + lam * phi - s1 * lam - s2 * phi);
    Rational v = ex * eta(q, s1 + s2) /
                 (eta(q, lam) * eta(q, phi) * eta(q, s2 - lam + phi) * eta(q, s1 + lam - phi));
    Factored out{QNum(v)};
    out *= eta_inf_factor(q);
    return out;
}

inline CertValue d_factor(long q, long lam, long phi, long s1, long s2, const Rational& tol = default_tol()) {
    require(tol > 0, "d_factor: tol must be positive");
    return d_factor_factored(q, lam, phi, s1, s2).evaluate(tol);
}

// ---------------------------------------------------------------------------
// vector-space and single-ring measures

inline Factored nu_vs_selfdual_factored(long q, const Rational& t, long lam) {
    require(t > 0, "nu_vs_selfdual: t must be positive");
    require(lam >= 0, "nu_vs_selfdual: rank must be non-negative");
    detail::require_half_integer(t, "nu_vs_selfdual: t must be a half-integer");
    Factored out{QNum::qpow_rat(q, -Rational(binom2(lam)) - t * lam) / QNum(eta(q, lam))};
    out *= InfFactor{q, t, 1, -1};
    return out;
}

inline CertValue nu_vs_selfdual(long q, const Rational& t, long lam, const Rational& tol = default_tol()) {
    return nu_vs_selfdual_factored(q, t, lam).evaluate(tol);
}

inline Factored nu_dvr_selfdual_factored(long q, const Rational& s, const Rational& eps, long r, long k,
                                         const Partition& lam) {
    require(s >= 0 && s - eps >= 0, "nu_dvr_selfdual: need s >= 0 and s - eps >= 0");
    require(r >= 1, "nu_dvr_selfdual: r must be >= 1");
    require(k >= 1, "nu_dvr_selfdual: k must be >= 1");
    detail::require_half_integer(s, "nu_dvr_selfdual: s must be a half-integer");
    detail::require_half_integer(eps, "nu_dvr_selfdual: eps must be a half-integer");
    detail::require_level(lam, k, "nu_dvr_selfdual: partition exceeds level k");

    Rational ex = -s * lam.total();
    for (long j = 1; j <= std::min(r, lam.length()); ++j) ex += binom2(lam(j)) + eps * lam(j);
    QNum v = QNum::qpow_rat(q, ex) / QNum(aut_order_rational(q, lam));
    const long top = std::min(k, r);
    for (long j = 2; j <= top; ++j) v *= pf(q, s - eps, lam(j - 1) - lam(j));
    v *= detail::finite_tail(q, s, lam(k) + 1, lam(top));
    Factored out{v};
    out *= InfFactor{q, s - eps + 1, 1, -1};
    return out;
}

inline CertValue nu_dvr_selfdual(long q, const Rational& s, const Rational& eps, long r, long k, const Partition& lam,
                                 const Rational& tol = default_tol()) {
    return nu_dvr_selfdual_factored(q, s, eps, r, k, lam).evaluate(tol);
}

inline Factored nu_dvr_dualpair_factored(long q, long s1, long s2, long r, long k1, long k2, const Partition& lam,
                                         const Partition& phi) {
    require(s1 >= 0 && s2 >= 0, "nu_dvr_dualpair: need s1, s2 >= 0");
    require(r >= 1 && k1 >= 1 && k2 >= 1, "nu_dvr_dualpair: need r, k1, k2 >= 1");
    detail::require_level(lam, k1, "nu_dvr_dualpair: lambda exceeds level k1");
    detail::require_level(phi, k2, "nu_dvr_dualpair: phi exceeds level k2");
    const long delta = lam(1) - phi(1);
    if (delta < -s1 || delta > s2) return Factored::zero();

    long ex = 0;
    for (long j = 1; j <= std::min(r, std::min(lam.length(), phi.length())); ++j) ex += lam(j) * phi(j);
    Rational den(1);
    for (long j = 1; j <= lam.length(); ++j) {
        ex -= lam(j) * lam(j) + s1 * lam(j);
        den *= eta(q, lam(j) - lam(j + 1));
    }
    for (long j = 1; j <= phi.length(); ++j) {
        ex -= phi(j) * phi(j) + s2 * phi(j);
        den *= eta(q, phi(j) - phi(j + 1));
    }
    Rational v = qpow(q, ex) / den;
    v *= eta(q, s1 + s2) / (eta(q, s2 - delta) * eta(q, s1 + delta));
    const long top = std::min({r, k1, k2});
    for (long j = 2; j <= top; ++j) {
        v *= qbar(q, lam(j - 1), lam(j), phi(j - 1), phi(j), s1, s2);
        if (v == 0) return Factored::zero();
    }
    QNum exact(v);
    exact *= detail::finite_tail(q, Rational(s1), lam(k1) + 1, lam(top));
    exact *= detail::finite_tail(q, Rational(s2), phi(k2) + 1, phi(top));
    Factored out{exact};
    out *= eta_inf_factor(q);
    return out;
}

inline CertValue nu_dvr_dualpair(long q, long s1, long s2, long r, long k1, long k2, const Partition& lam,
                                 const Partition& phi, const Rational& tol = default_tol()) {
    return nu_dvr_dualpair_factored(q, s1, s2, r, k1, k2, lam, phi).evaluate(tol);
}

// Level-k marginal of one side of a dual pair when the other side is unconstrained:
// its moments are |N|^{-s}, giving q^{-s|lam|}/|Aut| * eta(inf)/eta(lam_k + s).
inline Factored nu_dvr_free_factored(long q, long s, long k, const Partition& lam) {
    require(s >= 0 && k >= 1, "nu_dvr_free: need s >= 0 and k >= 1");
    detail::require_level(lam, k, "nu_dvr_free: partition exceeds level k");
    Rational v = qpow(q, -s * lam.total()) / aut_order_rational(q, lam) / eta(q, lam(k) + s);
    Factored out{QNum(v)};
    out *= eta_inf_factor(q);
    return out;
}

// ---------------------------------------------------------------------------
// group-level measures

inline bool support(const DecompData& decomp, const ModuleShape& shape, long depth) {
    require(depth >= 1, "support: depth must be >= 1");
    for (const auto& c : decomp.components) {
        if (c.self_dual() || c.id > c.dual_id) continue;
        const Partition& a = shape[c.id];
        const Partition& b = shape[c.dual_id];
        long bound = static_cast<long>(decomp.u) * c.n;
        for (long l = 1; l <= std::min<long>(depth, decomp.r); ++l)
            if (std::abs(a(l) - b(l)) > bound) return false;
    }
    return true;
}

inline void require_shape(const DecompData& decomp, const ModuleShape& shape) {
    for (const auto& [id, lam] : shape.components())
        if (!decomp.has(id)) throw std::invalid_argument("shape: unknown component id " + std::to_string(id));
}

inline Factored nu_level_factored(const DecompData& decomp, const LevelSpec& k, const ModuleShape& shape) {
    require_valid(decomp);
    require_shape(decomp, shape);
    for (const auto& [id, level] : k) {
        if (!decomp.has(id)) throw std::invalid_argument("level: unknown component id " + std::to_string(id));
        if (level < 0) throw std::invalid_argument("level: k must be non-negative");
    }
    auto level = [&](int id) {
        auto it = k.find(id);
        return it == k.end() ? 0L : it->second;
    };
    const long r = decomp.r;
    Factored out;
    for (const auto& c : decomp.components) {
        const long ki = level(c.id);
        const Partition& lam = shape[c.id];
        detail::require_level(lam, ki, "nu_level: partition exceeds its level");
        const long s = static_cast<long>(decomp.u) * c.n;
        if (c.self_dual()) {
            if (ki == 0) continue;
            const Rational eps = ratio(1 - *c.epsilon, 2);
            out *= nu_dvr_selfdual_factored(c.q, Rational(s), eps, r, ki, lam);
        } else if (c.id < c.dual_id) {
            const long kj = level(c.dual_id);
            const Partition& phi = shape[c.dual_id];
            detail::require_level(phi, kj, "nu_level: partition exceeds its level");
            if (ki == 0 && kj == 0) continue;
            if (ki == 0) out *= nu_dvr_free_factored(c.q, s, kj, phi);
            else if (kj == 0) out *= nu_dvr_free_factored(c.q, s, ki, lam);
            else out *= nu_dvr_dualpair_factored(c.q, s, s, r, ki, kj, lam, phi);
        }
        if (out.is_zero()) return Factored::zero();
    }
    return out;
}

inline CertValue nu_level(const DecompData& decomp, const LevelSpec& k, const ModuleShape& shape,
                          const Rational& tol = default_tol()) {
    require(tol > 0, "nu_level: tol must be positive");
    return nu_level_factored(decomp, k, shape).evaluate(tol);
}

inline LevelSpec module_levels(const DecompData& decomp, const ModuleShape& shape) {
    LevelSpec k;
    for (const auto& c : decomp.components) k[c.id] = std::max<long>(decomp.r, shape[c.id].length() + 1);
    return k;
}

inline Factored nu_module_factored(const DecompData& decomp, const ModuleShape& shape) {
    return nu_level_factored(decomp, module_levels(decomp, shape), shape);
}

inline CertValue nu_module(const DecompData& decomp, const ModuleShape& shape, const Rational& tol = default_tol()) {
    require(tol > 0, "nu_module: tol must be positive");
    return nu_module_factored(decomp, shape).evaluate(tol);
}

// p-torsion distribution, computed straight from its own closed form and
// cross-checked against the level-1 measure
inline Factored nu_ptors_factored(const DecompData& decomp, const std::map<int, long>& ranks) {
    require_valid(decomp);
    for (const auto& [id, f] : ranks) {
        if (!decomp.has(id)) throw std::invalid_argument("ranks: unknown component id " + std::to_string(id));
        if (f < 0) throw std::invalid_argument("ranks: must be non-negative");
    }
    auto rank = [&](int id) {
        auto it = ranks.find(id);
        return it == ranks.end() ? 0L : it->second;
    };
    const long u = decomp.u;
    // everything is a power of p times rationals in the individual q_i
    Rational p_exp(0);
    QNum v(1);
    Factored out;
    for (const auto& c : decomp.components) {
        const long f = rank(c.id);
        const long un = u * c.n;
        p_exp -= Rational(c.d * (f * c.n * u + f * f));
        v /= QNum(eta(c.q, f));
        if (c.self_dual()) {
            p_exp += Rational(c.d) * (binom2(f) + ratio((1 - *c.epsilon) * f, 2));
            out *= InfFactor{c.q, un + ratio(*c.epsilon + 1, 2), 1, -1};
        } else if (c.id < c.dual_id) {
            const long g = rank(c.dual_id);
            if (std::abs(f - g) > un) return Factored::zero();
            p_exp += Rational(c.d * f * g);
            v *= QNum(eta(c.q, 2 * un) / (eta(c.q, un - f + g) * eta(c.q, un + f - g)));
            out *= eta_inf_factor(c.q);
        }
    }
    out *= QNum::qpow_rat(decomp.p, p_exp) * v;

    ModuleShape shape;
    LevelSpec k;
    for (const auto& c : decomp.components) {
        shape.set(c.id, rank(c.id) ? Partition{rank(c.id)} : Partition());
        k[c.id] = 1;
    }
    Factored check = nu_level_factored(decomp, k, shape);
    if (!(check.exact() == out.exact()) || check.reduced_infinite() != out.reduced_infinite())
        throw std::logic_error("nu_ptors: disagrees with the level-1 measure");
    return out;
}

inline CertValue nu_ptors(const DecompData& decomp, const std::map<int, long>& ranks,
                          const Rational& tol = default_tol()) {
    require(tol > 0, "nu_ptors: tol must be positive");
    return nu_ptors_factored(decomp, ranks).evaluate(tol);
}

}  // namespace clm
