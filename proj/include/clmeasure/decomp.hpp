#pragma once

#include <json.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qexact.hpp"

namespace clm {

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// finite abelian group as invariant factors n_1 | n_2 | ...
class GroupSpec {
public:
    GroupSpec() = default;
    explicit GroupSpec(std::vector<long> factors) : factors_(canonical(std::move(factors))) {}

    static GroupSpec cyclic(long n) { return GroupSpec({n}); }

    // "cyclic:N" or "abelian:a,b,..."
    static GroupSpec parse(const std::string& text) {
        auto colon = text.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("group: expected cyclic:N or abelian:a,b,...");
        std::string kind = text.substr(0, colon), rest = text.substr(colon + 1);
        std::vector<long> f;
        std::stringstream ss(rest);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            size_t used = 0;
            long v = std::stol(tok, &used);
            if (used != tok.size()) throw std::invalid_argument("group: bad factor '" + tok + "'");
            f.push_back(v);
        }
        if (kind == "cyclic" && f.size() != 1) throw std::invalid_argument("group: cyclic takes one order");
        if (kind != "cyclic" && kind != "abelian") throw std::invalid_argument("group: unknown kind '" + kind + "'");
        return GroupSpec(std::move(f));
    }

    const std::vector<long>& factors() const { return factors_; }
    long order() const {
        return std::accumulate(factors_.begin(), factors_.end(), 1L, std::multiplies<>());
    }

    friend bool operator==(const GroupSpec&, const GroupSpec&) = default;

private:
    // elementary divisors regrouped into invariant factors; any input order gives the same result
    static std::vector<long> canonical(std::vector<long> in) {
        std::map<long, std::vector<long>> by_prime;
        for (long n : in) {
            if (n < 1) throw std::invalid_argument("group: factors must be positive");
            long x = n;
            for (long p = 2; p * p <= x || x > 1; ++p) {
                if (p * p > x) p = x;
                long pk = 1;
                while (x % p == 0) { x /= p; pk *= p; }
                if (pk > 1) by_prime[p].push_back(pk);
            }
        }
        size_t len = 0;
        for (auto& [p, v] : by_prime) {
            std::sort(v.begin(), v.end(), std::greater<>());
            len = std::max(len, v.size());
        }
        std::vector<long> out(len, 1);
        for (auto& [p, v] : by_prime)
            for (size_t j = 0; j < v.size(); ++j) out[len - 1 - j] *= v[j];
        return out;
    }

    std::vector<long> factors_;
};

struct ComponentData {
    int id = 2;
    int d = 1;
    int n = 1;
    long q = 2;
    std::optional<int> epsilon;
    int dual_id = 2;
    int m = 1;

    bool self_dual() const { return dual_id == id; }
    friend bool operator==(const ComponentData&, const ComponentData&) = default;
};

struct DecompData {
    long p = 2;
    int r = 1;
    int u = 1;
    std::vector<ComponentData> components;

    const ComponentData& component(int id) const {
        for (const auto& c : components)
            if (c.id == id) return c;
        throw std::out_of_range("unknown component id " + std::to_string(id));
    }
    bool has(int id) const {
        return std::any_of(components.begin(), components.end(), [&](const auto& c) { return c.id == id; });
    }
    std::vector<int> ids() const {
        std::vector<int> v;
        for (const auto& c : components) v.push_back(c.id);
        return v;
    }
    friend bool operator==(const DecompData&, const DecompData&) = default;
};

inline std::vector<ComponentData> decompose_abelian(const GroupSpec& group, long p) {
    require(is_prime(p), "decompose: p must be prime");
    const long order = group.order();
    if (order % p == 0) throw std::invalid_argument("decompose: p divides the group order");
    const auto& f = group.factors();
    const size_t t = f.size();

    // elements encoded mixed-radix
    auto decode = [&](long code) {
        std::vector<long> x(t);
        for (size_t j = t; j-- > 0;) {
            x[j] = code % f[j];
            code /= f[j];
        }
        return x;
    };
    auto encode = [&](const std::vector<long>& x) {
        long code = 0;
        for (size_t j = 0; j < t; ++j) code = code * f[j] + ((x[j] % f[j]) + f[j]) % f[j];
        return code;
    };
    auto scale = [&](long code, long s) {
        auto x = decode(code);
        for (auto& v : x) v *= s;
        return encode(x);
    };

    std::vector<int> orbit_of(static_cast<size_t>(order), -1);
    std::vector<std::vector<long>> orbits;
    for (long x = 1; x < order; ++x) {
        if (orbit_of[static_cast<size_t>(x)] >= 0) continue;
        std::vector<long> orb;
        long y = x;
        do {
            orbit_of[static_cast<size_t>(y)] = static_cast<int>(orbits.size());
            orb.push_back(y);
            y = scale(y, p);
        } while (y != x);
        orbits.push_back(orb);
    }
    // orbits are discovered in order of their smallest element, so ids are canonical
    std::vector<ComponentData> out;
    for (size_t i = 0; i < orbits.size(); ++i) {
        const auto& orb = orbits[i];
        ComponentData c;
        c.id = static_cast<int>(i) + 2;
        c.d = static_cast<int>(orb.size());
        c.n = 1;
        c.m = 1;
        c.q = ipow(p, static_cast<unsigned long>(c.d)).get_si();
        long neg = scale(orb[0], -1);
        c.dual_id = orbit_of[static_cast<size_t>(neg)] + 2;
        if (c.self_dual()) c.epsilon = (orb.size() == 1 && scale(orb[0], 2) == 0) ? 1 : 0;
        out.push_back(c);
    }
    return out;
}

inline DecompData make_decomp(const GroupSpec& group, long p, int r, int u) {
    return DecompData{p, r, u, decompose_abelian(group, p)};
}

inline std::vector<std::string> validate(const DecompData& data) {
    std::vector<std::string> v;
    auto add = [&](const std::string& s) { v.push_back(s); };
    if (!is_prime(data.p)) add("p=" + std::to_string(data.p) + " is not prime");
    if (data.r < 1) add("r must be >= 1");
    if (data.u < 1) add("u must be >= 1");
    std::set<int> seen;
    for (size_t i = 0; i < data.components.size(); ++i) {
        const auto& c = data.components[i];
        std::string tag = "component " + std::to_string(c.id) + ": ";
        if (c.id != static_cast<int>(i) + 2) add(tag + "ids must be consecutive from 2");
        seen.insert(c.id);
        if (c.d < 1) add(tag + "d must be >= 1");
        if (c.n < 1) add(tag + "n must be >= 1");
        if (c.m < 0 || c.m > c.n) add(tag + "m must satisfy 0 <= m <= n");
        if (c.d >= 1 && is_prime(data.p) && ipow(data.p, static_cast<unsigned long>(c.d)) != c.q)
            add(tag + "q must equal p^d");
        if (c.self_dual()) {
            if (!c.epsilon) add(tag + "self-dual component needs epsilon");
            else if (*c.epsilon < -1 || *c.epsilon > 1) add(tag + "epsilon must be -1, 0 or 1");
            else if (*c.epsilon == -1 && c.n == 1) add(tag + "epsilon=-1 requires wedge^2 != 0 (n >= 2)");
        } else if (c.epsilon) {
            add(tag + "epsilon given on a non-self-dual component");
        }
    }
    for (const auto& c : data.components) {
        std::string tag = "component " + std::to_string(c.id) + ": ";
        if (c.self_dual()) continue;
        if (!seen.count(c.dual_id)) {
            add(tag + "dual_id " + std::to_string(c.dual_id) + " does not exist");
            continue;
        }
        const auto& o = data.component(c.dual_id);
        if (o.dual_id != c.id) add(tag + "dual_id is not an involution");
        if (o.d != c.d || o.n != c.n || o.q != c.q || o.m != c.m)
            add(tag + "dual pair must share d, n, q and m");
    }
    return v;
}

inline void require_valid(const DecompData& data) {
    auto v = validate(data);
    if (v.empty()) return;
    std::string msg = "invalid decomposition data:";
    for (const auto& s : v) msg += " [" + s + "]";
    throw SchemaError(msg);
}

inline nlohmann::json to_json(const DecompData& data) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : data.components) {
        nlohmann::json j = {{"id", c.id}, {"d", c.d}, {"n", c.n}, {"q", c.q}, {"dual_id", c.dual_id}, {"m", c.m}};
        if (c.epsilon) j["epsilon"] = *c.epsilon;
        comps.push_back(j);
    }
    return {{"p", data.p}, {"r", data.r}, {"u", data.u}, {"components", comps}};
}

inline DecompData decomp_from_json(const nlohmann::json& j) {
    auto need = [](const nlohmann::json& o, const char* key) -> const nlohmann::json& {
        if (!o.is_object() || !o.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
        if (!o[key].is_number_integer()) throw SchemaError(std::string("field '") + key + "' must be an integer");
        return o[key];
    };
    DecompData d;
    d.p = need(j, "p").get<long>();
    d.r = j.contains("r") ? need(j, "r").get<int>() : 1;
    d.u = j.contains("u") ? need(j, "u").get<int>() : 1;
    if (!j.contains("components") || !j["components"].is_array()) throw SchemaError("missing array 'components'");
    for (const auto& cj : j["components"]) {
        ComponentData c;
        c.id = need(cj, "id").get<int>();
        c.d = need(cj, "d").get<int>();
        c.n = need(cj, "n").get<int>();
        c.q = need(cj, "q").get<long>();
        c.dual_id = need(cj, "dual_id").get<int>();
        c.m = cj.contains("m") ? need(cj, "m").get<int>() : c.n;
        if (cj.contains("epsilon") && !cj["epsilon"].is_null()) c.epsilon = need(cj, "epsilon").get<int>();
        if (c.self_dual() && !c.epsilon) throw SchemaError("component " + std::to_string(c.id) + ": missing 'epsilon'");
        d.components.push_back(c);
    }
    require_valid(d);
    return d;
}

inline DecompData load_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("malformed JSON: ") + e.what());
    }
    return decomp_from_json(j);
}

inline std::string save_json(const DecompData& data) { return to_json(data).dump(2); }

}  // namespace clm
