#pragma once

#include <json.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "decomp.hpp"
#include "measure.hpp"
#include "partmod.hpp"
#include "render.hpp"

namespace clm {

// components with m_i >= 1
inline std::vector<int> invariant_components(const DecompData& decomp) {
    std::vector<int> out;
    for (const auto& c : decomp.components)
        if (c.m >= 1) out.push_back(c.id);
    return out;
}

inline void require_invariant_shape(const DecompData& decomp, const ModuleShape& inv) {
    require_shape(decomp, inv);
    if (invariant_components(decomp).empty()) throw std::invalid_argument("pushforward: no component has m >= 1");
    for (const auto& [id, lam] : inv.components())
        if (decomp.component(id).m == 0 && !lam.empty())
            throw std::invalid_argument("pushforward: component " + std::to_string(id) +
                                        " has m = 0 but carries a nonzero partition");
}

// levels: max(r, len + 1) on invariant components, 0 elsewhere
inline LevelSpec pushforward_levels(const DecompData& decomp, const ModuleShape& inv) {
    LevelSpec k;
    for (const auto& c : decomp.components)
        if (c.m >= 1) k[c.id] = std::max<long>(decomp.r, inv[c.id].length() + 1);
    return k;
}

inline Factored pushforward_factored(const DecompData& decomp, const ModuleShape& inv) {
    require_valid(decomp);
    require_invariant_shape(decomp, inv);
    return nu_level_factored(decomp, pushforward_levels(decomp, inv), inv);
}

inline CertValue pushforward_prob(const DecompData& decomp, const ModuleShape& inv,
                                  const Rational& tol = default_tol()) {
    return pushforward_factored(decomp, inv).evaluate(tol);
}

// |U| for the invariant module: q_i^{m_i |lambda^i|} per component
inline Integer invariant_module_size(const DecompData& decomp, const ModuleShape& inv) {
    Integer s = 1;
    for (const auto& [id, lam] : inv.components()) {
        const auto& c = decomp.component(id);
        s *= ipow(c.q, static_cast<unsigned long>(c.m * lam.total()));
    }
    return s;
}

// |e_i V| = |e_i U|^{n_i / m_i}; returns |V| computed through that rule
inline Integer size_from_invariants(const DecompData& decomp, const ModuleShape& inv) {
    Integer s = 1;
    for (const auto& [id, lam] : inv.components()) {
        const auto& c = decomp.component(id);
        if (c.m == 0) continue;
        const Integer ui = ipow(c.q, static_cast<unsigned long>(c.m * lam.total()));
        Integer root;
        if (!mpz_root(root.get_mpz_t(), ui.get_mpz_t(), static_cast<unsigned long>(c.m)))
            throw std::logic_error("size_from_invariants: invariant size is not an m-th power");
        s *= ipow(root.get_si(), static_cast<unsigned long>(c.n));
    }
    return s;
}

// single self-dual component with d = 1, eps = 1, m = 1, r = 1
inline DecompData ai_pair_decomp(long p, int n2, int u) {
    require(is_prime(p), "ai_pair: p must be prime");
    require(n2 >= 1 && u >= 1, "ai_pair: n2 and u must be >= 1");
    DecompData d;
    d.p = p;
    d.r = 1;
    d.u = u;
    ComponentData c;
    c.id = 2;
    c.d = 1;
    c.n = n2;
    c.q = p;
    c.epsilon = 1;
    c.dual_id = 2;
    c.m = 1;
    d.components.push_back(c);
    return d;
}

inline Factored ai_pair_factored(long p, int n2, int u, const Partition& lam) {
    require(is_prime(p), "ai_pair_prob: p must be prime");
    const long un = static_cast<long>(u) * n2;
    Rational v = qpow(p, binom2(lam.first()) - un * lam.total()) / aut_order_rational(p, lam);
    for (long l = 1; l <= lam.first(); ++l) v *= 1 - qpow(p, -un - l);
    Factored out{QNum(v)};
    out *= InfFactor{p, Rational(un + 1), 1, -1};
    return out;
}

inline CertValue ai_pair_prob(long p, int n2, int u, const Partition& lam, const Rational& tol = default_tol()) {
    return ai_pair_factored(p, n2, u, lam).evaluate(tol);
}

inline Factored ai_rank_factored(long p, int n2, int u, long rank) {
    require(rank >= 0, "ai_rank_prob: rank must be >= 0");
    require(is_prime(p), "ai_rank_prob: p must be prime");
    const long un = static_cast<long>(u) * n2;
    const Partition elem = rank == 0 ? Partition() : Partition{rank};
    Factored out{QNum(qpow(p, binom2(rank) - un * rank) / aut_order_rational(p, elem))};
    out *= InfFactor{p, Rational(un + 1), 1, -1};
    return out;
}

inline CertValue ai_rank_prob(long p, int n2, int u, long rank, const Rational& tol = default_tol()) {
    return ai_rank_factored(p, n2, u, rank).evaluate(tol);
}

// unnormalized weights for an irreducible pair with W_p irreducible; U has partition lam
inline QNum ours_weight(long q, int eps, int n2, int u, const Partition& lam) {
    const long un = static_cast<long>(u) * n2;
    const long l1 = lam.first();
    QNum v = QNum::qpow_rat(q, Rational(binom2(l1)) + ratio((1 - eps) * l1, 2) - un * lam.total());
    Rational f = 1 / aut_order_rational(q, lam);
    for (long l = 1; l <= l1; ++l) f *= 1 - qpow(q, -un - l);
    return v * QNum(f);
}

inline QNum malle_weight(long q, long d, int n2, int u, const Partition& lam) {
    const long un = static_cast<long>(u) * n2;
    const long l1 = lam.first();
    Rational v = Rational(ipow(d, static_cast<unsigned long>(l1))) * qpow(q, binom2(l1) - un * lam.total()) /
                 aut_order_rational(q, lam);
    for (long l = 1; l <= l1; ++l) v *= 1 - qpow(q, -un - l);
    return QNum(v);
}

// the two weights agree up to a constant iff p^{(1-eps) d / 2} = d
inline bool malle_agrees(long p, long d, int eps) {
    require(is_prime(p), "malle_agrees: p must be prime");
    require(d >= 1, "malle_agrees: d must be >= 1");
    require(eps == 0 || eps == 1 || eps == -1, "malle_agrees: eps must be -1, 0 or 1");
    return QNum::qpow_rat(p, ratio((1 - eps) * d, 2)) == QNum(Rational(d));
}

struct RatioRow {
    std::string module;
    ModuleShape shape;
    QNum ours;
    std::optional<QNum> malle;
};

struct RatioReport {
    int u;
    std::vector<RatioRow> rows;
    bool agree;
};

inline DecompData c7_decomp(int u) { return make_decomp(GroupSpec::cyclic(7), 2, 1, u); }

// nu(V) |V|^u |Aut V| for 1, R1/2, R2/2, R1/2 x R2/2, normalized by the first entry
inline RatioReport ip_ratio_report(int u) {
    require(u >= 1, "ip_ratio_report: u must be >= 1");
    const DecompData d = c7_decomp(u);
    const int a = d.components.at(0).id, b = d.components.at(1).id;
    auto mk = [&](long x, long y) {
        ModuleShape s;
        if (x) s.set(a, Partition{x});
        if (y) s.set(b, Partition{y});
        return s;
    };
    const std::vector<std::pair<std::string, ModuleShape>> mods = {
        {"1", mk(0, 0)}, {"R1/2", mk(1, 0)}, {"R2/2", mk(0, 1)}, {"R1/2 x R2/2", mk(1, 1)}};

    std::vector<QNum> raw;
    std::optional<std::vector<InfFactor>> inf;
    for (const auto& [name, s] : mods) {
        const Factored f = nu_module_factored(d, s);
        const auto red = f.reduced_infinite();
        if (inf && *inf != red) throw std::logic_error("ip_ratio_report: infinite factors do not cancel");
        inf = red;
        Integer size = module_size(d, s);
        Integer su;
        mpz_pow_ui(su.get_mpz_t(), size.get_mpz_t(), static_cast<unsigned long>(u));
        raw.push_back(f.exact() * QNum(Rational(su * aut_order(d, s))));
    }
    RatioReport rep{u, {}, false};
    const QNum malle_last(6 * (1 - qpow(2, -6L * (u + 1))));
    for (size_t i = 0; i < mods.size(); ++i) {
        std::optional<QNum> m;
        if (i == 0) m = QNum(1);
        if (i == 3) m = malle_last;
        rep.rows.push_back({mods[i].first, mods[i].second, raw[i] / raw[0], m});
    }
    rep.agree = rep.rows[3].ours == *rep.rows[3].malle;
    return rep;
}

inline std::string ratio_csv(const RatioReport& r) {
    std::ostringstream os;
    os << "module,ours_exact,ours_decimal,malle_exact,malle_decimal\n";
    for (const auto& row : r.rows) {
        os << row.module << "," << row.ours.str() << "," << format_decimal(row.ours.enclose(96).mid(), 10) << ",";
        if (row.malle) os << row.malle->str() << "," << format_decimal(row.malle->enclose(96).mid(), 10);
        else os << "-,-";
        os << "\n";
    }
    return os.str();
}

inline nlohmann::ordered_json ratio_json(const RatioReport& r) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        nlohmann::ordered_json j{{"module", row.module},
                                 {"ours_exact", row.ours.str()},
                                 {"ours_decimal", format_decimal(row.ours.enclose(96).mid(), 10)}};
        if (row.malle) {
            j["malle_exact"] = row.malle->str();
            j["malle_decimal"] = format_decimal(row.malle->enclose(96).mid(), 10);
        } else {
            j["malle_exact"] = nullptr;
            j["malle_decimal"] = nullptr;
        }
        rows.push_back(j);
    }
    return {{"case", "ip"}, {"u", r.u}, {"rows", rows}, {"verdict", r.agree ? "agree" : "disagree"}};
}

}  // namespace clm
