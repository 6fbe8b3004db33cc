#pragma once

#include <json.hpp>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "decomp.hpp"
#include "measure.hpp"
#include "moments.hpp"
#include "nongalois.hpp"
#include "oracle.hpp"
#include "partmod.hpp"
#include "render.hpp"
#include "spmodel.hpp"

namespace clm {

using ojson = nlohmann::ordered_json;

inline double to_d(const Rational& x) { return x.get_d(); }

struct SuiteResult {
    explicit SuiteResult(std::string n) : name(std::move(n)) {}
    std::string name;
    bool pass = true;
    ojson details = ojson::object();
    std::vector<std::string> failures;

    void fail(std::string why) {
        pass = false;
        if (failures.size() < 50) failures.push_back(std::move(why));
    }
    ojson json() const {
        ojson j{{"suite", name}, {"pass", pass}, {"details", details}};
        j["failures"] = failures;
        return j;
    }
};

struct VerifyOptions {
    Integer bound = 0;  // 0: suite default
    long emax = 10;
    Rational tol = default_tol();
    long samples = 200000;
    std::uint64_t seed = 42;
    unsigned workers = 0;
};

struct Config {
    std::string label;
    DecompData decomp;
};

inline std::vector<Config> standard_configs() {
    std::vector<Config> out;
    for (int r : {1, 2})
        for (int u : {1, 2})
            out.push_back({"C3 p=2 r=" + std::to_string(r) + " u=" + std::to_string(u),
                           make_decomp(GroupSpec::cyclic(3), 2, r, u)});
    out.push_back({"C7 p=2 r=1 u=1", make_decomp(GroupSpec::cyclic(7), 2, 1, 1)});
    out.push_back({"C2 p=3 r=1 u=1", make_decomp(GroupSpec::cyclic(2), 3, 1, 1)});
    return out;
}

inline std::string shape_label(const DecompData& d, const ModuleShape& s) { return shape_json(d, s).dump(); }

// ---------------------------------------------------------------------------

inline SuiteResult suite_pf_identity(const VerifyOptions& = {}) {
    SuiteResult res("pf-identity");
    long checked = 0;
    for (long q : {2L, 3L, 4L, 8L, 9L})
        for (long m = 0; m <= 30; ++m) {
            ++checked;
            if (!(pf(q, Rational(0), m) == QNum(pf_closed_zero(q, m))))
                res.fail("q=" + std::to_string(q) + " m=" + std::to_string(m));
        }
    res.details["checked"] = checked;
    return res;
}

// closed-form counts against brute-force enumeration for module pairs with |A||B| <= bound
inline SuiteResult suite_oracle(const VerifyOptions& opt = {}) {
    SuiteResult res("oracle");
    const Integer bound = opt.bound > 0 ? opt.bound : Integer(1024);
    long pairs = 0, auts = 0, elem = 0;
    for (long q : {2L, 3L, 4L, 8L}) {
        long top = 0;
        while (ipow(q, static_cast<unsigned long>(top + 1)) <= bound) ++top;
        for (const auto& rho : partitions_up_to(top))
            for (const auto& lam : partitions_up_to(top - rho.total())) {
                const auto A = OracleModule::from_shape(q, rho), B = OracleModule::from_shape(q, lam);
                const auto oc = oracle_counts(A, B, bound);
                const std::string tag = "q=" + std::to_string(q) + " " + rho.str() + "->" + lam.str();
                ++pairs;
                if (oc.surjections != sur_count(q, rho, lam)) res.fail("sur_count " + tag);
                if (rho == lam) {
                    ++auts;
                    if (oc.surjections != aut_order(q, lam)) res.fail("aut_order " + tag);
                }
                if (rho.total() >= lam.total()) {
                    ++elem;
                    const Integer want = elem_kernel_sur_count(q, rho, lam, rho.total() - lam.total()) * aut_order(q, lam);
                    if (oc.elementary_kernel != want) res.fail("elem_kernel_sur_count " + tag);
                }
            }
    }
    res.details["bound"] = bound.get_str();
    res.details["pairs"] = pairs;
    res.details["aut_checks"] = auts;
    res.details["elem_kernel_checks"] = elem;
    return res;
}

// zero exactly where a dual pair differs by more than u in some of the first r parts
inline SuiteResult suite_support(const VerifyOptions& opt = {}) {
    SuiteResult res("support");
    const Integer bound = opt.bound > 0 ? opt.bound : Integer(4096);
    long shapes = 0, zeros = 0;
    for (int u : {1, 2})
        for (int r : {1, 2}) {
            const auto d = make_decomp(GroupSpec::cyclic(7), 2, r, u);
            const int a = d.components[0].id, b = d.components[1].id;
            for (const auto& s : enumerate_shapes(d, bound)) {
                bool excluded = false;
                for (long l = 1; l <= r; ++l)
                    if (std::abs(s[a](l) - s[b](l)) > u) excluded = true;
                const CertValue v = nu_module(d, s, opt.tol);
                ++shapes;
                const std::string tag = "u=" + std::to_string(u) + " r=" + std::to_string(r) + " " + shape_label(d, s);
                if (excluded) {
                    ++zeros;
                    if (!v.is_zero()) res.fail("expected exact zero " + tag);
                } else if (!v.positive()) {
                    res.fail("enclosure touches zero " + tag);
                }
            }
        }
    res.details["bound"] = bound.get_str();
    res.details["shapes"] = shapes;
    res.details["zero_shapes"] = zeros;
    return res;
}

// all level sets with k_i <= kmax and shapes with |lambda| <= max_total
inline std::vector<std::pair<LevelSpec, ModuleShape>> level_cases(const DecompData& d, long kmax, long max_total) {
    std::vector<std::pair<LevelSpec, ModuleShape>> out;
    std::vector<long> ks(d.components.size(), 0);
    std::function<void(size_t)> over_k = [&](size_t i) {
        if (i < ks.size()) {
            for (long k = 0; k <= kmax; ++k) {
                ks[i] = k;
                over_k(i + 1);
            }
            return;
        }
        LevelSpec spec;
        for (size_t j = 0; j < ks.size(); ++j)
            if (ks[j] > 0) spec[d.components[j].id] = ks[j];
        ModuleShape cur;
        std::function<void(size_t, long)> over_shape = [&](size_t j, long left) {
            if (j == ks.size()) {
                out.emplace_back(spec, cur);
                return;
            }
            for (long n = 0; n <= left; ++n)
                for (const auto& lam : partitions_of(n, ks[j])) {
                    cur.set(d.components[j].id, lam);
                    over_shape(j + 1, left - n);
                }
            cur.set(d.components[j].id, Partition());
        };
        over_shape(0, max_total);
    };
    over_k(0);
    return out;
}

// tail decay rate of the successive-difference envelope over the second half of the layers
inline double tail_ratio(const std::vector<Rational>& diffs) {
    if (diffs.size() < 2) return 0;
    std::vector<double> env(diffs.size());
    double m = 0;
    for (size_t i = diffs.size(); i-- > 0;) {
        m = std::max(m, diffs[i].get_d());
        env[i] = m;
    }
    const size_t last = env.size() - 1, mid = last / 2;
    if (env[last] == 0) return 0;
    if (env[mid] == 0) return 1;
    return std::pow(env[last] / env[mid], 1.0 / static_cast<double>(last - mid));
}

inline SuiteResult suite_reconstruct(const VerifyOptions& opt = {}) {
    SuiteResult res("reconstruct");
    const long emax = opt.emax;
    ojson cfgs = ojson::array();
    double worst_err = 0, worst_ratio = 0;
    long cases = 0;
    for (const auto& cfg : standard_configs()) {
        double cfg_err = 0, cfg_ratio = 0;
        for (const auto& [k, s] : level_cases(cfg.decomp, 2, 3)) {
            const auto vr = v_reconstruct(cfg.decomp, k, s, emax);
            const CertValue nu = nu_level(cfg.decomp, k, s, opt.tol);
            const double err = std::max(to_d(abs(vr.partial - nu.lo())), to_d(abs(vr.partial - nu.hi())));
            const double ratio_ = tail_ratio(vr.differences());
            ++cases;
            cfg_err = std::max(cfg_err, err);
            cfg_ratio = std::max(cfg_ratio, ratio_);
            std::string ks;
            for (const auto& [id, v] : k) ks += std::to_string(id) + ":" + std::to_string(v) + " ";
            const std::string tag = cfg.label + " k={" + ks + "} " + shape_label(cfg.decomp, s);
            if (err >= 1e-4) res.fail("mismatch " + tag + " err=" + std::to_string(err));
            if (emax >= 4 && ratio_ >= 1) res.fail("no geometric decay " + tag);
        }
        cfgs.push_back({{"config", cfg.label}, {"max_abs_error", cfg_err}, {"max_tail_ratio", cfg_ratio}});
        worst_err = std::max(worst_err, cfg_err);
        worst_ratio = std::max(worst_ratio, cfg_ratio);
    }
    res.details["emax"] = emax;
    res.details["cases"] = cases;
    res.details["max_abs_error"] = worst_err;
    res.details["max_tail_ratio"] = worst_ratio;
    res.details["configs"] = cfgs;
    return res;
}

inline SuiteResult suite_moment_check(const VerifyOptions& opt = {}) {
    SuiteResult res("moment-check");
    const std::vector<Integer> bounds = {Integer(1) << 10, Integer(1) << 12, Integer(1) << 14};
    const Integer target_bound = Integer(1) << 8;
    ojson cfgs = ojson::array();
    long targets = 0;
    double worst_rel = 0;
    for (const auto& cfg : standard_configs()) {
        const auto table = measure_table(cfg.decomp, bounds.back(), opt.tol);
        double cfg_rel = 0;
        for (const auto& t : enumerate_shapes(cfg.decomp, target_bound)) {
            ++targets;
            std::vector<Rational> resid;
            for (const auto& b : bounds) resid.push_back(moment_check(cfg.decomp, table, t, b).residual_hi);
            const Rational m = moment(cfg.decomp, t).rational();
            const double rel = to_d(resid.back() / m);
            cfg_rel = std::max(cfg_rel, rel);
            const std::string tag = cfg.label + " " + shape_label(cfg.decomp, t);
            if (!(resid.back() < m / 100)) res.fail("residual too large " + tag + " rel=" + std::to_string(rel));
            for (size_t i = 1; i < resid.size(); ++i)
                if (resid[i] > resid[i - 1]) res.fail("residual increased " + tag);
        }
        cfgs.push_back({{"config", cfg.label}, {"max_relative_residual", cfg_rel}});
        worst_rel = std::max(worst_rel, cfg_rel);
    }
    res.details["targets"] = targets;
    res.details["max_relative_residual"] = worst_rel;
    res.details["configs"] = cfgs;
    return res;
}

inline SuiteResult suite_normalization(const VerifyOptions& opt = {}) {
    SuiteResult res("normalization");
    const auto d = make_decomp(GroupSpec::cyclic(3), 2, 2, 1);
    const int id = d.components.at(0).id;
    CertValue nine(Rational(0));
    for (const auto& lam : partitions_up_to(4)) {
        if (lam.total() == 4 && lam != Partition{1, 1, 1, 1} && lam != Partition{2, 1, 1}) continue;
        ModuleShape s;
        s.set(id, lam);
        nine += nu_module(d, s, opt.tol);
    }
    if (!(nine.lo() > Rational(998, 1000) && nine.hi() <= 1)) res.fail("nine-shape mass outside (0.998, 1]");
    const Integer bound = opt.bound > 0 ? opt.bound : Integer(1) << 16;
    CertValue mass(Rational(0));
    for (const auto& w : measure_table(d, bound, opt.tol)) mass += w.nu;
    if (!(mass.lo() > Rational(9999, 10000))) res.fail("mass up to bound does not exceed 0.9999");
    if (!(mass.hi() <= 1)) res.fail("mass upper endpoint exceeds 1");
    res.details["nine_shape_mass"] = value_json(nine, 8);
    res.details["bound"] = bound.get_str();
    res.details["mass"] = value_json(mass, 8);
    return res;
}

struct ReferenceValue {
    Partition lam;
    const char* printed;
};

// printed reference values for C3, p=2, r=2, u=1
inline const std::vector<ReferenceValue>& c3_reference() {
    static const std::vector<ReferenceValue> v = {
        {{}, "0.853"},           {{1}, "0.124"},         {{1, 1}, "0.0166"},
        {{2}, "0.0038"},         {{1, 1, 1}, "0.0010"},  {{2, 1}, "0.00060"},
        {{3}, "0.000038"},       {{1, 1, 1, 1}, "0.000066"}, {{2, 1, 1}, "0.000037"}};
    return v;
}

inline Rational parse_decimal(const std::string& s) {
    const auto dot = s.find('.');
    std::string digits = s;
    long frac = 0;
    if (dot != std::string::npos) {
        digits = s.substr(0, dot) + s.substr(dot + 1);
        frac = static_cast<long>(s.size() - dot - 1);
    }
    return Rational(Integer(digits, 10)) / qpow(10, frac);
}

inline Rational last_digit_unit(const std::string& s) {
    const auto dot = s.find('.');
    return dot == std::string::npos ? Rational(1) : qpow(10, -static_cast<long>(s.size() - dot - 1));
}

inline SuiteResult suite_reference_table(const VerifyOptions& opt = {}) {
    SuiteResult res("reference-table");
    const auto d = make_decomp(GroupSpec::cyclic(3), 2, 2, 1);
    const int id = d.components.at(0).id;
    ojson rows = ojson::array();
    for (const auto& ref : c3_reference()) {
        ModuleShape s;
        s.set(id, ref.lam);
        const CertValue v = evaluate_for_print(nu_module_factored(d, s), opt.tol, 6);
        const Rational want = parse_decimal(ref.printed), unit = last_digit_unit(ref.printed);
        const Rational dev = std::max(Rational(abs(v.hi() - want)), Rational(abs(v.lo() - want)));
        const bool ok = dev <= unit;
        if (!ok) res.fail("shape " + ref.lam.str() + ": computed " + format_decimal(v.mid(), 6) + ", printed " +
                          ref.printed);
        rows.push_back({{"shape", ref.lam.str()},
                        {"computed", format_decimal(v.mid(), 6)},
                        {"printed", ref.printed},
                        {"deviation_in_units", to_d(dev / unit)},
                        {"ok", ok}});
    }
    res.details["rows"] = rows;
    return res;
}

inline SuiteResult suite_simulate(const VerifyOptions& opt = {}) {
    SuiteResult res("simulate");
    const long p = 3, r = 1, k = 2;
    const int g = 6;
    const auto h = run_experiment(p, r, k, g, opt.samples, opt.seed, opt.workers);
    const auto cmp = compare_to_limit(h, nullptr, opt.tol);
    if (!(cmp.p_value > 1e-3)) res.fail("chi-square p-value " + std::to_string(cmp.p_value));
    if (!(cmp.max_abs_z_large < 4)) res.fail("max |z| " + std::to_string(cmp.max_abs_z_large));
    const auto& mom = cmp.moments.at(0);
    if (!(mom.deviation_sigmas <= 3)) res.fail("moment off by " + std::to_string(mom.deviation_sigmas) + " sigma");

    const auto scan = convergence_scan(p, r, k, {2, 4, 6}, opt.samples, opt.seed, opt.workers);
    ojson sj = ojson::array();
    for (size_t i = 0; i < scan.size(); ++i) {
        sj.push_back({{"g", scan[i].g}, {"divergence", scan[i].divergence}, {"chi_square", scan[i].chi_square},
                      {"dof", scan[i].dof}});
        if (i > 0 && scan[i].divergence > scan[i - 1].divergence)
            res.fail("divergence increased from g=" + std::to_string(scan[i - 1].g) + " to g=" +
                     std::to_string(scan[i].g));
    }
    res.details["histogram"] = histogram_json(h);
    res.details["comparison"] = comparison_json(cmp);
    res.details["scan"] = sj;
    return res;
}

inline SuiteResult suite_ratios(const VerifyOptions& = {}) {
    SuiteResult res("ratios");
    auto expect = [&](int u, const std::vector<Rational>& want) {
        const auto rep = ip_ratio_report(u);
        for (size_t i = 0; i < want.size(); ++i)
            if (!(rep.rows[i].ours == QNum(want[i])))
                res.fail("u=" + std::to_string(u) + " row " + rep.rows[i].module + ": " + rep.rows[i].ours.str());
        return rep;
    };
    const Rational a1 = 1 - qpow(2, -3), b1 = 1 - qpow(2, -6);
    const auto rep1 = expect(1, {1, a1, a1, 8 * b1 * b1});
    const Rational a2 = 1 - qpow(2, -6), b2 = 1 - qpow(2, -9);
    expect(2, {1, a2, a2, 8 * b2 * b2});
    if (!(*rep1.rows[3].malle == QNum(6 * (1 - qpow(2, -12))))) res.fail("Malle column");
    if (rep1.agree) res.fail("verdict should be disagree");

    long checked = 0;
    for (long p : {2L, 3L, 5L, 7L, 11L})
        for (long d = 1; d <= 8; ++d)
            for (int eps : {0, 1}) {
                ++checked;
                const bool want = (eps == 1 && d == 1) || (eps == 0 && p == 2 && (d == 2 || d == 4));
                if (malle_agrees(p, d, eps) != want)
                    res.fail("agreement p=" + std::to_string(p) + " d=" + std::to_string(d) + " eps=" +
                             std::to_string(eps));
            }
    res.details["u1"] = ratio_json(rep1);
    res.details["agreement_cases"] = checked;
    return res;
}

// C7, p=2, r=u=1 closed form in terms of the first parts a1, a2
inline Factored c7_closed_form(const DecompData& d, const ModuleShape& s) {
    const int ia = d.components.at(0).id, ib = d.components.at(1).id;
    const long a1 = s[ia].first(), a2 = s[ib].first();
    const long diff = std::abs(a1 - a2);
    if (diff > 1) return Factored::zero();
    Rational v = qpow(8, a1 * a2) / Rational(module_size(d, s) * aut_order(d, s));
    for (long i = 1; i <= a1; ++i) v *= 1 - qpow(8, -1 - i);
    for (long i = 1; i <= a2; ++i) v *= 1 - qpow(8, -1 - i);
    if (diff == 0) v *= 1 + qpow(8, -1);
    Factored out{QNum(v)};
    out *= eta_inf_factor(8);
    return out;
}

// probability that |V/2V| = 8^k
inline Factored c7_rank_form(long k) {
    Rational v;
    if (k % 2 == 0) {
        v = qpow(8, -(k * k) / 4 - k) * (1 - qpow(8, -2));
        for (long i = 1; i <= k / 2; ++i) v /= (1 - qpow(8, -i)) * (1 - qpow(8, -i));
        v /= 1 - qpow(8, -1);  // the infinite product starts at i = 2
    } else {
        v = 2 * qpow(8, -(k * k + 3) / 4 - k);
        for (long i = 1; i <= (k + 1) / 2; ++i) v /= 1 - qpow(8, -i);
        for (long i = 1; i <= (k - 1) / 2; ++i) v /= 1 - qpow(8, -i);
    }
    Factored out{QNum(v)};
    out *= eta_inf_factor(8);
    return out;
}

inline SuiteResult suite_c7(const VerifyOptions& opt = {}) {
    SuiteResult res("c7-formula");
    const auto d = make_decomp(GroupSpec::cyclic(7), 2, 1, 1);
    const Rational tol = qpow(10, -14);
    long shapes = 0;
    double worst = 0;
    for (const auto& s : enumerate_shapes(d, Integer(1) << 12)) {
        ++shapes;
        const CertValue a = c7_closed_form(d, s).evaluate(tol), b = nu_module(d, s, tol);
        const double dev = std::max(to_d(abs(a.hi() - b.lo())), to_d(abs(b.hi() - a.lo())));
        worst = std::max(worst, dev);
        if (dev >= 1e-10) res.fail("shape " + shape_label(d, s));
    }
    const int ia = d.components.at(0).id, ib = d.components.at(1).id;
    double worst_rank = 0;
    for (long k = 0; k <= 6; ++k) {
        CertValue sum(Rational(0));
        for (long a1 = 0; a1 <= k; ++a1) sum += nu_ptors(d, {{ia, a1}, {ib, k - a1}}, tol);
        const CertValue want = c7_rank_form(k).evaluate(tol);
        const double dev = std::max(to_d(abs(sum.hi() - want.lo())), to_d(abs(want.hi() - sum.lo())));
        worst_rank = std::max(worst_rank, dev);
        if (dev >= 1e-8) res.fail("rank k=" + std::to_string(k));
    }
    res.details["shapes"] = shapes;
    res.details["max_shape_deviation"] = worst;
    res.details["max_rank_deviation"] = worst_rank;
    (void)opt;
    return res;
}

// ---------------------------------------------------------------------------

inline const std::vector<std::pair<std::string, std::function<SuiteResult(const VerifyOptions&)>>>& suites() {
    static const std::vector<std::pair<std::string, std::function<SuiteResult(const VerifyOptions&)>>> s = {
        {"pf-identity", suite_pf_identity}, {"oracle", suite_oracle},
        {"support", suite_support},         {"reconstruct", suite_reconstruct},
        {"moment-check", suite_moment_check}, {"normalization", suite_normalization},
        {"reference-table", suite_reference_table}, {"simulate", suite_simulate},
        {"ratios", suite_ratios},           {"c7-formula", suite_c7}};
    return s;
}

inline std::optional<SuiteResult> run_suite(const std::string& name, const VerifyOptions& opt = {}) {
    for (const auto& [n, f] : suites())
        if (n == name) return f(opt);
    return std::nullopt;
}

}  // namespace clm
