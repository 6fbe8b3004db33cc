#pragma once

#include <json.hpp>

#include <string>

#include "decomp.hpp"
#include "partition.hpp"
#include "qexact.hpp"

namespace clm {

inline constexpr int kSchemaVersion = 1;

enum class Round { Nearest, Down, Up };

// %g-style decimal with `sig` significant digits and the requested rounding
inline std::string format_decimal(const Rational& x, int sig = 6, Round mode = Round::Nearest) {
    if (x == 0) return "0";
    const bool neg = x < 0;
    Rational ax = abs(x);
    // exponent e with 10^e <= ax < 10^{e+1}
    long e = static_cast<long>(mpz_sizeinbase(ax.get_num_mpz_t(), 10)) -
             static_cast<long>(mpz_sizeinbase(ax.get_den_mpz_t(), 10));
    auto pow10 = [](long k) { return qpow(10, k); };
    while (ax >= pow10(e + 1)) ++e;
    while (ax < pow10(e)) --e;
    long shift = sig - 1 - e;
    Rational scaled = ax * pow10(shift);
    Integer digits;
    Round m = mode;
    if (neg && m != Round::Nearest) m = (m == Round::Down) ? Round::Up : Round::Down;
    if (m == Round::Nearest) {
        Rational h = scaled + Rational(1, 2);
        mpz_fdiv_q(digits.get_mpz_t(), h.get_num_mpz_t(), h.get_den_mpz_t());
    } else if (m == Round::Down) {
        mpz_fdiv_q(digits.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
    } else {
        mpz_cdiv_q(digits.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
    }
    if (digits == 0) return neg ? "-0" : "0";
    std::string ds = digits.get_str();
    if (static_cast<long>(ds.size()) > sig) {  // rounded up to the next power of ten
        ++e;
        ds = ds.substr(0, static_cast<size_t>(sig));
    }
    // trim trailing zeros
    while (ds.size() > 1 && ds.back() == '0') ds.pop_back();
    std::string out;
    if (e >= -5 && e < sig) {
        if (e >= 0) {
            std::string ip = ds.substr(0, std::min(ds.size(), static_cast<size_t>(e + 1)));
            while (static_cast<long>(ip.size()) < e + 1) ip += '0';
            std::string fp = ds.size() > static_cast<size_t>(e + 1) ? ds.substr(static_cast<size_t>(e + 1)) : "";
            out = fp.empty() ? ip : ip + "." + fp;
        } else {
            out = "0." + std::string(static_cast<size_t>(-e - 1), '0') + ds;
        }
    } else {
        out = ds.substr(0, 1);
        if (ds.size() > 1) out += "." + ds.substr(1);
        char buf[16];
        std::snprintf(buf, sizeof buf, "e%+03ld", e);
        out += buf;
    }
    return neg ? "-" + out : out;
}

// exact fraction when short, otherwise an outward-rounded decimal
inline std::string endpoint_string(const Rational& x, Round mode) {
    std::string f = x.get_str();
    if (f.size() <= 32) return f;
    return format_decimal(x, 20, mode);
}

inline nlohmann::json cert_json(const CertValue& v) {
    return {{"lo", endpoint_string(v.lo(), Round::Down)}, {"hi", endpoint_string(v.hi(), Round::Up)}};
}

// one ulp at `sig` significant digits of the midpoint
inline Rational print_ulp(const CertValue& v, int sig) {
    Rational m = abs(v.mid());
    if (m == 0) return Rational(0);
    long e = static_cast<long>(mpz_sizeinbase(m.get_num_mpz_t(), 10)) -
             static_cast<long>(mpz_sizeinbase(m.get_den_mpz_t(), 10)) - 1;
    while (m >= qpow(10, e + 1)) ++e;
    while (m < qpow(10, e)) --e;
    return qpow(10, e - sig + 1);
}

inline CertValue evaluate_for_print(const Factored& f, const Rational& tol, int sig = 6) {
    CertValue v = f.evaluate(tol);
    Rational t = tol;
    for (int i = 0; i < 6 && !v.is_point(); ++i) {
        Rational ulp = print_ulp(v, sig);
        if (ulp == 0 || v.width() < ulp) break;
        t = ulp / 100;
        v = f.evaluate(t);
    }
    return v;
}

inline nlohmann::json value_json(const CertValue& v, int sig = 6) {
    nlohmann::json j = cert_json(v);
    j["decimal"] = format_decimal(v.mid(), sig);
    return j;
}

inline std::string qnum_string(const QNum& x) { return x.str(); }

inline nlohmann::json partition_json(const Partition& p) { return p.parts(); }

inline Partition partition_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw SchemaError("partition must be a JSON array");
    std::vector<long> v;
    for (const auto& x : j) {
        if (!x.is_number_integer()) throw SchemaError("partition entries must be integers");
        v.push_back(x.get<long>());
    }
    try {
        return Partition(std::move(v));
    } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what());
    }
}

// array of partitions in component id order
inline nlohmann::json shape_json(const DecompData& decomp, const ModuleShape& shape) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& c : decomp.components) a.push_back(partition_json(shape[c.id]));
    return a;
}

inline ModuleShape shape_from_json(const DecompData& decomp, const nlohmann::json& j) {
    if (!j.is_array()) throw SchemaError("shape must be a JSON array of partitions");
    if (j.size() > decomp.components.size()) throw std::invalid_argument("shape: more entries than components");
    ModuleShape s;
    for (size_t i = 0; i < j.size(); ++i) s.set(decomp.components[i].id, partition_from_json(j[i]));
    return s;
}

inline ModuleShape parse_shape(const DecompData& decomp, const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("malformed shape: ") + e.what());
    }
    return shape_from_json(decomp, j);
}

// abelian group of the underlying module, e.g. "4^2 x 2^2"
inline std::string group_description(const DecompData& decomp, const ModuleShape& shape) {
    std::map<long, long, std::greater<>> mult;  // p^a -> multiplicity
    for (const auto& [id, lam] : shape.components()) {
        const auto& c = decomp.component(id);
        const Partition conj = lam.conjugate();
        for (long a : conj.parts()) mult[ipow(decomp.p, static_cast<unsigned long>(a)).get_si()] += c.d * c.n;
    }
    if (mult.empty()) return "1";
    std::string s;
    for (const auto& [order, m] : mult) {
        if (!s.empty()) s += " x ";
        s += std::to_string(order) + "^" + std::to_string(m);
    }
    return s;
}

}  // namespace clm
