#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <vector>

#include "decomp.hpp"
#include "partition.hpp"
#include "qexact.hpp"

namespace clm {

inline Integer module_size(const DecompData& decomp, const ModuleShape& shape) {
    Integer size(1);
    for (const auto& [id, lam] : shape.components()) {
        const auto& c = decomp.component(id);
        size *= ipow(c.q, static_cast<unsigned long>(c.n * lam.total()));
    }
    return size;
}

inline Rational aut_order_rational(long q, const Partition& lam) {
    long sq = 0;
    Rational r(1);
    for (long j = 1; j <= lam.length(); ++j) {
        sq += lam(j) * lam(j);
        r *= eta(q, lam(j) - lam(j + 1));
    }
    return r * qpow(q, sq);
}

inline Integer aut_order(long q, const Partition& lam) {
    return to_integer(aut_order_rational(q, lam), "aut_order: non-integral result");
}

inline Integer aut_order(const DecompData& decomp, const ModuleShape& shape) {
    Integer r(1);
    for (const auto& [id, lam] : shape.components()) r *= aut_order(decomp.component(id).q, lam);
    return r;
}

inline bool interlaces(const Partition& rho, const Partition& lam) {
    long len = std::max(rho.length(), lam.length()) + 1;
    for (long j = 1; j <= len; ++j)
        if (!(rho(j) >= lam(j) && lam(j) >= rho(j + 1))) return false;
    return true;
}

// surjections N_{rho'} -> N_{lam'} with kernel (R/m)^e, up to Aut(N_{lam'})
inline Integer elem_kernel_sur_count(long q, const Partition& rho, const Partition& lam, long e) {
    if (e < 0 || rho.total() != lam.total() + e || !interlaces(rho, lam)) return Integer(0);
    long ex = -binom2(e);
    Rational r(1);
    for (long j = 1; j <= rho.length(); ++j) {
        ex += binom2(rho(j)) - binom2(lam(j));
        r *= eta(q, rho(j) - rho(j + 1)) / (eta(q, rho(j) - lam(j)) * eta(q, lam(j) - rho(j + 1)));
    }
    return to_integer(r * qpow(q, ex), "elem_kernel_sur_count: non-integral result");
}

inline Integer mu_hat(long q, const Partition& lam, const Partition& rho) {
    long e = rho.total() - lam.total();
    if (e < 0) return Integer(0);
    Integer c = elem_kernel_sur_count(q, rho, lam, e);
    Integer r = c * ipow(q, static_cast<unsigned long>(binom2(e)));
    return (e % 2) ? Integer(-r) : r;
}

// |Hom(N_{rho'}, N_{lam'})| = q^{sum_t rho_t lam_t}
inline Integer hom_count(long q, const Partition& rho, const Partition& lam) {
    long ex = 0;
    for (long t = 1; t <= std::min(rho.length(), lam.length()); ++t) ex += rho(t) * lam(t);
    return ipow(q, static_cast<unsigned long>(ex));
}

// |Sur(N_{rho'}, N_{lam'})|: a map is onto iff its dual is injective on the socle
inline Integer sur_count(long q, const Partition& rho, const Partition& lam) {
    Partition b = lam.conjugate();  // cyclic exponents of the target, descending
    Rational r(hom_count(q, rho, lam));
    for (long j = 1; j <= b.length(); ++j) {
        long ex = j - 1 - rho(b(j));
        if (ex >= 0) return Integer(0);
        r *= 1 - qpow(q, ex);
    }
    return to_integer(r, "sur_count: non-integral result");
}

inline Integer sur_count(const DecompData& decomp, const ModuleShape& from, const ModuleShape& to) {
    Integer r(1);
    for (const auto& c : decomp.components) {
        r *= sur_count(c.q, from[c.id], to[c.id]);
        if (r == 0) break;
    }
    return r;
}

// exponent of p in |(wedge^2 V)^Gamma[p^r]|, possibly a half-integer when data are inconsistent
inline Rational wedge2_p_exponent(const DecompData& decomp, const ModuleShape& shape, int r) {
    require(r >= 1, "wedge2: r must be >= 1");
    Rational ex(0);
    for (const auto& c : decomp.components) {
        const Partition& lam = shape[c.id];
        if (c.self_dual()) {
            require(c.epsilon.has_value(), "wedge2: self-dual component without epsilon");
            Rational t(0);
            for (long j = 1; j <= r; ++j) t += binom2(lam(j)) + ratio((1 - *c.epsilon) * lam(j), 2);
            ex += t * c.d;
        } else if (c.id < c.dual_id) {
            const Partition& phi = shape[c.dual_id];
            long t = 0;
            for (long j = 1; j <= r; ++j) t += lam(j) * phi(j);
            ex += Rational(t * c.d);
        }
    }
    return ex;
}

inline Integer wedge2_invariant_order(const DecompData& decomp, const ModuleShape& shape, int r) {
    Rational ex = wedge2_p_exponent(decomp, shape, r);
    if (!is_integral(ex)) throw std::domain_error("wedge2_invariant_order: non-integral result");
    return ipow(decomp.p, ex.get_num().get_ui());
}

// every shape with module_size <= max_order, by size then (id, partition) lexicographically
inline std::vector<ModuleShape> enumerate_shapes(const DecompData& decomp, const Integer& max_order) {
    require(max_order >= 1, "enumerate_shapes: max_order must be >= 1");
    struct Item { Integer size; ModuleShape shape; };
    std::vector<Item> items;
    const auto& comps = decomp.components;
    std::function<void(size_t, const Integer&, ModuleShape&)> rec = [&](size_t i, const Integer& size,
                                                                        ModuleShape& cur) {
        if (i == comps.size()) {
            items.push_back({size, cur});
            return;
        }
        const auto& c = comps[i];
        Integer unit = ipow(c.q, static_cast<unsigned long>(c.n));
        Integer s = size;
        for (long n = 0; s <= max_order; ++n, s *= unit) {
            for (const auto& lam : partitions_of(n)) {
                cur.set(c.id, lam);
                rec(i + 1, s, cur);
            }
        }
        cur.set(c.id, Partition());
    };
    ModuleShape cur;
    rec(0, Integer(1), cur);
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        if (a.size != b.size) return a.size < b.size;
        return a.shape < b.shape;
    });
    std::vector<ModuleShape> out;
    out.reserve(items.size());
    for (auto& it : items) out.push_back(std::move(it.shape));
    return out;
}

}  // namespace clm
