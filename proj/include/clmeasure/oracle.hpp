#pragma once

// Brute-force ground truth over Galois rings GR(p^a, d) = (Z/p^a)[x]/(f).
// Modules are direct sums of cyclic modules R/p^{a_i}; homomorphisms are
// enumerated through the images of the cyclic generators.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "partition.hpp"
#include "qexact.hpp"

namespace clm {

// monic irreducible polynomial of degree d over F_p, coefficients low to high (length d+1)
inline std::vector<long> irreducible_poly(long p, int d) {
    require(is_prime(p) && d >= 1, "irreducible_poly: bad field");
    auto divides = [p](std::vector<long> num, const std::vector<long>& den) {
        // den monic
        const size_t dd = den.size() - 1;
        for (size_t i = num.size(); i-- > dd;) {
            long c = num[i] % p;
            if (!c) continue;
            for (size_t j = 0; j <= dd; ++j) num[i - dd + j] = ((num[i - dd + j] - c * den[j]) % p + p) % p;
        }
        return std::all_of(num.begin(), num.end(), [p](long v) { return v % p == 0; });
    };
    auto monic = [p](int deg, long code) {
        std::vector<long> v(static_cast<size_t>(deg) + 1);
        for (int i = 0; i < deg; ++i) {
            v[static_cast<size_t>(i)] = code % p;
            code /= p;
        }
        v[static_cast<size_t>(deg)] = 1;
        return v;
    };
    long total = ipow(p, static_cast<unsigned long>(d)).get_si();
    for (long code = 0; code < total; ++code) {
        auto f = monic(d, code);
        bool irr = true;
        for (int e = 1; irr && 2 * e <= d; ++e) {
            long te = ipow(p, static_cast<unsigned long>(e)).get_si();
            for (long c2 = 0; c2 < te; ++c2)
                if (divides(f, monic(e, c2))) {
                    irr = false;
                    break;
                }
        }
        if (irr) return f;
    }
    throw std::logic_error("irreducible_poly: none found");
}

class GaloisRing {
public:
    using Elem = std::vector<long>;

    GaloisRing(long p, int d, int a) : p_(p), d_(d), a_(a), mod_(ipow(p, static_cast<unsigned long>(a)).get_si()),
                                      f_(irreducible_poly(p, d)) {}

    long p() const { return p_; }
    int d() const { return d_; }
    long modulus() const { return mod_; }

    Elem zero() const { return Elem(static_cast<size_t>(d_), 0); }
    Elem one() const {
        Elem e = zero();
        e[0] = 1 % mod_;
        return e;
    }
    Elem add(const Elem& x, const Elem& y) const {
        Elem r(x.size());
        for (size_t i = 0; i < x.size(); ++i) r[i] = (x[i] + y[i]) % mod_;
        return r;
    }
    Elem mul(const Elem& x, const Elem& y) const {
        std::vector<__int128> t(2 * static_cast<size_t>(d_), 0);
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) t[static_cast<size_t>(i + j)] += static_cast<__int128>(x[static_cast<size_t>(i)]) * y[static_cast<size_t>(j)];
        for (size_t i = t.size(); i-- > static_cast<size_t>(d_);) {
            __int128 c = t[i] % mod_;
            t[i] = 0;
            for (int j = 0; j < d_; ++j) t[i - static_cast<size_t>(d_) + static_cast<size_t>(j)] -= c * f_[static_cast<size_t>(j)];
        }
        Elem r = zero();
        for (int i = 0; i < d_; ++i) r[static_cast<size_t>(i)] = static_cast<long>(((t[static_cast<size_t>(i)] % mod_) + mod_) % mod_);
        return r;
    }
    Elem pow(Elem x, Integer e) const {
        Elem r = one();
        while (e > 0) {
            if (mpz_odd_p(e.get_mpz_t())) r = mul(r, x);
            x = mul(x, x);
            e >>= 1;
        }
        return r;
    }
    Elem omega() const {
        Elem e = zero();
        if (d_ == 1) e[0] = (mod_ - f_[0]) % mod_;  // root of x + f0
        else e[1] = 1;
        return e;
    }

    // Teichmuller lift of a generator of the residue field's unit group
    Elem teichmuller_generator() const {
        long q = ipow(p_, static_cast<unsigned long>(d_)).get_si();
        Integer qa = ipow(q, static_cast<unsigned long>(a_));
        std::vector<long> primes;
        for (long x = q - 1, t = 2; x > 1; ++t) {
            if (t * t > x) t = x;
            if (x % t == 0) {
                primes.push_back(t);
                while (x % t == 0) x /= t;
            }
        }
        GaloisRing res(p_, d_, 1);
        long total = q;
        for (long code = 1; code < total; ++code) {
            Elem g = res.zero();
            long c = code;
            for (int i = 0; i < d_; ++i) {
                g[static_cast<size_t>(i)] = c % p_;
                c /= p_;
            }
            bool gen = std::all_of(primes.begin(), primes.end(),
                                   [&](long ell) { return res.pow(g, Integer((q - 1) / ell)) != res.one(); });
            if (!gen) continue;
            return pow(g, qa);  // g^{q^a} is fixed by Frobenius to precision p^a
        }
        throw std::logic_error("teichmuller_generator: no generator found");
    }

private:
    long p_;
    int d_;
    int a_;
    long mod_;
    std::vector<long> f_;
};

// direct sum of R/p^{a_i} over the unramified ring with residue field F_{p^d}
struct OracleModule {
    long p = 2;
    int d = 1;
    std::vector<long> exps;  // non-increasing cyclic exponents

    static OracleModule from_shape(long q, const Partition& lam) {
        auto [p, d] = prime_power(q);
        require(p != 0, "OracleModule: q must be a prime power");
        return OracleModule{p, d, lam.conjugate().parts()};
    }
    long q() const { return ipow(p, static_cast<unsigned long>(d)).get_si(); }
    Integer order() const {
        long t = 0;
        for (long a : exps) t += a;
        return ipow(q(), static_cast<unsigned long>(t));
    }
    long max_exp() const { return exps.empty() ? 0 : exps.front(); }
};

namespace detail {

using FpVec = std::array<int8_t, 24>;

struct Echelon {
    std::array<FpVec, 24> rows{};
    std::array<int, 24> pivot{};
    int rank = 0;

    bool insert(FpVec v, int dim, long p) {
        for (int i = 0; i < rank; ++i) {
            int pc = pivot[static_cast<size_t>(i)];
            long c = v[static_cast<size_t>(pc)];
            if (!c) continue;
            for (int j = 0; j < dim; ++j)
                v[static_cast<size_t>(j)] = static_cast<int8_t>(((v[static_cast<size_t>(j)] - c * rows[static_cast<size_t>(i)][static_cast<size_t>(j)]) % p + p) % p);
        }
        int pc = -1;
        for (int j = 0; j < dim; ++j)
            if (v[static_cast<size_t>(j)]) {
                pc = j;
                break;
            }
        if (pc < 0) return false;
        long inv = 1;
        while ((inv * v[static_cast<size_t>(pc)]) % p != 1) ++inv;
        for (int j = 0; j < dim; ++j) v[static_cast<size_t>(j)] = static_cast<int8_t>((v[static_cast<size_t>(j)] * inv) % p);
        rows[static_cast<size_t>(rank)] = v;
        pivot[static_cast<size_t>(rank)] = pc;
        ++rank;
        return true;
    }
};

// explicit elements of a module over GR(p^K, d)
class ModuleArith {
public:
    explicit ModuleArith(const OracleModule& m)
        : m_(m), ring_(m.p, m.d, static_cast<int>(std::max<long>(1, m.max_exp()))) {}

    const OracleModule& module() const { return m_; }
    const GaloisRing& ring() const { return ring_; }
    size_t coords() const { return m_.exps.size() * static_cast<size_t>(m_.d); }

    long pk(long e) const { return ipow(m_.p, static_cast<unsigned long>(e)).get_si(); }

    // all x with p^a x = 0
    std::vector<std::vector<long>> torsion(long a) const {
        std::vector<std::vector<long>> out{{}};
        for (size_t j = 0; j < m_.exps.size(); ++j) {
            long b = m_.exps[j];
            long step = pk(std::max<long>(b - a, 0)), mod = pk(b);
            std::vector<std::vector<long>> next;
            for (const auto& prefix : out) {
                std::vector<long> cur = prefix;
                cur.resize(prefix.size() + static_cast<size_t>(m_.d));
                std::function<void(int)> rec = [&](int t) {
                    if (t == m_.d) {
                        next.push_back(cur);
                        return;
                    }
                    for (long v = 0; v < mod; v += step) {
                        cur[prefix.size() + static_cast<size_t>(t)] = v;
                        rec(t + 1);
                    }
                };
                rec(0);
            }
            out = std::move(next);
        }
        return out;
    }

    // omega^t x, each block multiplied in the Galois ring then reduced mod p^{b_j}
    std::vector<long> times_omega_pow(const std::vector<long>& x, int t) const {
        auto w = ring_.pow(ring_.omega(), Integer(t));
        std::vector<long> out(x.size());
        for (size_t j = 0; j < m_.exps.size(); ++j) {
            GaloisRing::Elem blk(x.begin() + static_cast<long>(j) * m_.d, x.begin() + static_cast<long>(j + 1) * m_.d);
            auto prod = ring_.mul(blk, w);
            long mod = pk(m_.exps[j]);
            for (int i = 0; i < m_.d; ++i) out[j * static_cast<size_t>(m_.d) + static_cast<size_t>(i)] = prod[static_cast<size_t>(i)] % mod;
        }
        return out;
    }

    // image in M/pM as an F_p vector
    FpVec reduce_mod_p(const std::vector<long>& x) const {
        FpVec v{};
        for (size_t i = 0; i < x.size(); ++i) v[i] = static_cast<int8_t>(x[i] % m_.p);
        return v;
    }

    // x in M[p], written in F_p coordinates (each coordinate is a multiple of p^{b_j-1})
    FpVec socle_coords(const std::vector<long>& x) const {
        FpVec v{};
        for (size_t j = 0; j < m_.exps.size(); ++j) {
            long unit = pk(m_.exps[j] - 1);
            for (int i = 0; i < m_.d; ++i) {
                size_t at = j * static_cast<size_t>(m_.d) + static_cast<size_t>(i);
                if (x[at] % unit) throw std::logic_error("socle_coords: element not p-torsion");
                v[at] = static_cast<int8_t>((x[at] / unit) % m_.p);
            }
        }
        return v;
    }

    std::vector<long> scale(const std::vector<long>& x, long s) const {
        std::vector<long> out(x.size());
        for (size_t j = 0; j < m_.exps.size(); ++j) {
            long mod = pk(m_.exps[j]);
            for (int i = 0; i < m_.d; ++i) {
                size_t at = j * static_cast<size_t>(m_.d) + static_cast<size_t>(i);
                out[at] = (x[at] * (s % mod)) % mod;
            }
        }
        return out;
    }

private:
    OracleModule m_;
    GaloisRing ring_;
};

}  // namespace detail

struct OracleCounts {
    Integer surjections;
    Integer elementary_kernel;  // surjections whose kernel is killed by p
};

// Enumerates every tuple of generator images. Onto-ness: the images together
// with their omega-multiples must span B/pB over F_p (Nakayama over Z_p).
inline OracleCounts oracle_counts(const OracleModule& A, const OracleModule& B,
                                  const Integer& bound = Integer(1) << 12) {
    require(A.p == B.p && A.d == B.d, "oracle: modules over different rings");
    if (A.order() * B.order() > bound) throw std::invalid_argument("oracle: order bound exceeded");
    OracleCounts res{Integer(0), Integer(0)};
    const long p = A.p;
    const int d = A.d;
    detail::ModuleArith bm(B);
    const int dim = static_cast<int>(bm.coords());
    if (dim > 24) throw std::invalid_argument("oracle: module too large");
    if (B.order() > A.order() || B.exps.size() > A.exps.size()) return res;  // onto impossible by counting
    if (B.exps.empty()) {
        res.surjections = 1;
        res.elementary_kernel = std::all_of(A.exps.begin(), A.exps.end(), [](long a) { return a <= 1; }) ? 1 : 0;
        return res;
    }

    struct Image {
        std::vector<detail::FpVec> span;    // omega^t y mod p
        std::vector<detail::FpVec> socle;   // omega^t p^{a-1} y in B[p]
    };
    std::vector<std::vector<Image>> choices;
    for (long a : A.exps) {
        std::vector<Image> list;
        for (const auto& y : bm.torsion(a)) {
            Image im;
            auto py = bm.scale(y, bm.pk(a - 1));
            for (int t = 0; t < d; ++t) {
                im.span.push_back(bm.reduce_mod_p(bm.times_omega_pow(y, t)));
                im.socle.push_back(bm.socle_coords(bm.times_omega_pow(py, t)));
            }
            list.push_back(std::move(im));
        }
        choices.push_back(std::move(list));
    }

    // kernel is p-torsion iff f(A[p]) has F_p-dimension dim_Fp A[p] - log_p |ker|
    long a_socle_dim = static_cast<long>(A.exps.size()) * d;
    long log_ker = 0;
    for (long a : A.exps) log_ker += a * d;
    for (long b : B.exps) log_ker -= b * d;
    const long want_socle_rank = a_socle_dim - log_ker;

    const size_t n = A.exps.size();
    std::vector<const Image*> chosen(n);
    std::function<void(size_t, const detail::Echelon&)> rec = [&](size_t i, const detail::Echelon& ech) {
        if (ech.rank + static_cast<int>((n - i) * static_cast<size_t>(d)) < dim) return;
        if (i == n) {
            res.surjections += 1;
            detail::Echelon soc;
            for (const auto* im : chosen)
                for (const auto& v : im->socle) soc.insert(v, dim, p);
            if (soc.rank == want_socle_rank) res.elementary_kernel += 1;
            return;
        }
        for (const auto& im : choices[i]) {
            detail::Echelon next = ech;
            for (const auto& v : im.span) next.insert(v, dim, p);
            chosen[i] = &im;
            rec(i + 1, next);
        }
    };
    rec(0, detail::Echelon{});
    return res;
}

inline Integer oracle_sur_count(const OracleModule& A, const OracleModule& B,
                                const Integer& bound = Integer(1) << 12) {
    return oracle_counts(A, B, bound).surjections;
}

// Slow variant for tiny modules: builds the generated submodule by closure.
inline Integer oracle_sur_count_closure(const OracleModule& A, const OracleModule& B) {
    require(A.p == B.p && A.d == B.d, "oracle: modules over different rings");
    if (B.order() > 4096 || A.order() * B.order() > (Integer(1) << 16))
        throw std::invalid_argument("oracle closure: too large");
    detail::ModuleArith bm(B);
    const long border = B.order().get_si();
    auto encode = [&](const std::vector<long>& x) {
        long code = 0;
        for (size_t j = 0; j < B.exps.size(); ++j)
            for (int i = 0; i < B.d; ++i) code = code * bm.pk(B.exps[j]) + x[j * static_cast<size_t>(B.d) + static_cast<size_t>(i)];
        return code;
    };
    auto all = bm.torsion(B.max_exp());
    std::vector<size_t> index_of_code(static_cast<size_t>(border));
    for (size_t i = 0; i < all.size(); ++i) index_of_code[static_cast<size_t>(encode(all[i]))] = i;
    auto add = [&](const std::vector<long>& x, const std::vector<long>& y) {
        std::vector<long> r(x.size());
        for (size_t j = 0; j < B.exps.size(); ++j) {
            long mod = bm.pk(B.exps[j]);
            for (int i = 0; i < B.d; ++i) {
                size_t at = j * static_cast<size_t>(B.d) + static_cast<size_t>(i);
                r[at] = (x[at] + y[at]) % mod;
            }
        }
        return r;
    };

    std::vector<std::vector<std::vector<long>>> choices;
    for (long a : A.exps) choices.push_back(bm.torsion(a));
    Integer count(0);
    std::vector<size_t> pick(choices.size(), 0);
    while (true) {
        std::vector<char> in(static_cast<size_t>(border), 0);
        std::vector<std::vector<long>> members{all[index_of_code[0]]};
        in[0] = 1;
        std::vector<std::vector<long>> gens;
        for (size_t i = 0; i < choices.size(); ++i) gens.push_back(choices[i][pick[i]]);
        for (size_t at = 0; at < members.size(); ++at) {
            auto x = members[at];
            std::vector<std::vector<long>> nexts{bm.times_omega_pow(x, 1)};
            for (const auto& g : gens) nexts.push_back(add(x, g));
            for (auto& y : nexts) {
                long c = encode(y);
                if (!in[static_cast<size_t>(c)]) {
                    in[static_cast<size_t>(c)] = 1;
                    members.push_back(std::move(y));
                }
            }
        }
        if (static_cast<long>(members.size()) == border) count += 1;
        size_t i = 0;
        for (; i < pick.size(); ++i) {
            if (++pick[i] < choices[i].size()) break;
            pick[i] = 0;
        }
        if (i == pick.size()) break;
    }
    return count;
}

}  // namespace clm
