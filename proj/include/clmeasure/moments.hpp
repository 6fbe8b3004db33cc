#pragma once

#include <json.hpp>

#include <functional>
#include <vector>

#include "measure.hpp"
#include "partmod.hpp"
#include "render.hpp"

namespace clm {

inline QNum moment(const DecompData& decomp, const ModuleShape& shape) {
    require_shape(decomp, shape);
    Integer w = wedge2_invariant_order(decomp, shape, decomp.r);
    Integer size = module_size(decomp, shape);
    Integer den = 1;
    mpz_pow_ui(den.get_mpz_t(), size.get_mpz_t(), static_cast<unsigned long>(decomp.u));
    return QNum(ratio(w, den));
}

struct VReconstruction {
    Rational partial;                 // sum over all layers up to e_max
    std::vector<Rational> layers;     // partial sums S_0, ..., S_{e_max}
    Rational residual;                // magnitude of the last layer, heuristic only
    std::vector<Rational> differences() const {
        std::vector<Rational> d;
        for (size_t e = 1; e < layers.size(); ++e) d.push_back(Rational(abs(layers[e] - layers[e - 1])));
        return d;
    }
};

// sum over P of mu_hat(N, P) M_P / |Aut P| with P ranging over level-k shapes;
// layer e holds the P whose per-component excess |rho^i| - |lam^i| is at most e
inline VReconstruction v_reconstruct(const DecompData& decomp, const LevelSpec& k, const ModuleShape& shape,
                                     long e_max) {
    require(e_max >= 0, "v_reconstruct: e_max must be >= 0");
    require_valid(decomp);
    require_shape(decomp, shape);
    auto level = [&](int id) {
        auto it = k.find(id);
        return it == k.end() ? 0L : it->second;
    };

    struct Option {
        Partition rho;
        long excess;
        Rational weight;  // mu_hat / |Aut|
    };
    std::vector<std::vector<Option>> options;
    for (const auto& c : decomp.components) {
        const long ki = level(c.id);
        const Partition& lam = shape[c.id];
        if (lam(ki + 1) != 0) throw std::invalid_argument("v_reconstruct: partition exceeds its level");
        std::vector<Option> opts;
        for (long e = 0; e <= e_max; ++e) {
            if (ki == 0 && e > 0) break;
            for (const auto& rho : partitions_of(lam.total() + e, ki)) {
                Integer mh = mu_hat(c.q, lam, rho);
                if (mh == 0) continue;
                opts.push_back({rho, e, Rational(mh) / aut_order_rational(c.q, rho)});
            }
        }
        options.push_back(std::move(opts));
    }

    std::vector<Rational> by_layer(static_cast<size_t>(e_max) + 1, Rational(0));
    ModuleShape cur;
    std::function<void(size_t, long, const Rational&)> rec = [&](size_t i, long max_e, const Rational& w) {
        if (i == options.size()) {
            by_layer[static_cast<size_t>(max_e)] += w * moment(decomp, cur).rational();
            return;
        }
        const int id = decomp.components[i].id;
        for (const auto& o : options[i]) {
            cur.set(id, o.rho);
            rec(i + 1, std::max(max_e, o.excess), w * o.weight);
        }
        cur.set(id, Partition());
    };
    rec(0, 0, Rational(1));

    VReconstruction out;
    Rational run(0);
    for (const auto& b : by_layer) {
        run += b;
        out.layers.push_back(run);
    }
    out.partial = run;
    out.residual = abs(by_layer.back());
    return out;
}

struct WeightedShape {
    ModuleShape shape;
    Integer size;
    CertValue nu;
};

// nu_module for every shape up to the bound, in enumeration order
inline std::vector<WeightedShape> measure_table(const DecompData& decomp, const Integer& bound,
                                                const Rational& tol = default_tol()) {
    std::vector<WeightedShape> out;
    for (auto& s : enumerate_shapes(decomp, bound)) {
        Integer size = module_size(decomp, s);
        CertValue v = nu_module(decomp, s, tol);
        out.push_back({std::move(s), size, std::move(v)});
    }
    return out;
}

struct MomentReport {
    ModuleShape target;
    Integer bound;
    QNum moment;
    CertValue partial_sum;
    Rational residual_hi;  // moment - partial.lo
    Rational residual_lo;  // moment - partial.hi
};

inline MomentReport moment_check(const DecompData& decomp, const std::vector<WeightedShape>& table,
                                 const ModuleShape& target, const Integer& bound) {
    Integer tsize = module_size(decomp, target);
    if (bound < tsize) throw std::invalid_argument("moment_check: bound too small to include the target");
    MomentReport rep{target, bound, moment(decomp, target), CertValue(Rational(0)), Rational(0), Rational(0)};
    CertValue sum(Rational(0));
    for (const auto& w : table) {
        if (w.size > bound) continue;
        if (w.nu.is_zero()) continue;
        Integer s = sur_count(decomp, w.shape, target);
        if (s == 0) continue;
        sum += w.nu * Rational(s);
    }
    rep.partial_sum = sum;
    CertValue m = rep.moment.enclose(128);
    rep.residual_hi = m.hi() - sum.lo();
    rep.residual_lo = m.lo() - sum.hi();
    return rep;
}

inline MomentReport moment_check(const DecompData& decomp, const ModuleShape& target, const Integer& bound,
                                 const Rational& tol = default_tol()) {
    Integer tsize = module_size(decomp, target);
    if (bound < tsize) throw std::invalid_argument("moment_check: bound too small to include the target");
    return moment_check(decomp, measure_table(decomp, bound, tol), target, bound);
}

inline nlohmann::json report_json(const DecompData& decomp, const MomentReport& r) {
    return {{"target", shape_json(decomp, r.target)},
            {"bound", r.bound.get_str()},
            {"moment", qnum_string(r.moment)},
            {"partial_sum", cert_json(r.partial_sum)},
            {"residual_hi", format_decimal(r.residual_hi, 12, Round::Up)}};
}

}  // namespace clm
