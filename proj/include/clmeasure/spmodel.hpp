#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "measure.hpp"
#include "partition.hpp"
#include "partmod.hpp"

namespace clm {

// ---------------------------------------------------------------------------
// counter-based random stream: SplitMix64 keyed by (seed, index)

class KeyedStream {
public:
    KeyedStream(std::uint64_t seed, std::uint64_t index) : state_(mix(seed ^ mix(index + 0x632be59bd9b4e019ULL))) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // uniform on [0, n)
    std::uint64_t below(std::uint64_t n) {
        // Lemire's multiply-shift with rejection
        std::uint64_t x = next();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t t = -n % n;
            while (lo < t) {
                x = next();
                m = static_cast<unsigned __int128>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------

class MatrixModPk {
public:
    MatrixModPk(long p, long k, int n) : p_(p), k_(k), n_(n), mod_(1), a_(static_cast<size_t>(n) * n, 0) {
        require(is_prime(p), "MatrixModPk: p must be prime");
        require(k >= 1, "MatrixModPk: k must be >= 1");
        require(n >= 1, "MatrixModPk: size must be positive");
        for (long i = 0; i < k; ++i) {
            mod_ *= p;
            require(mod_ < (std::int64_t{1} << 31), "MatrixModPk: p^k too large");
        }
    }
    static MatrixModPk identity(long p, long k, int n) {
        MatrixModPk m(p, k, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }
    // standard form [[0, I], [-I, 0]]
    static MatrixModPk symplectic_form(long p, long k, int g) {
        MatrixModPk j(p, k, 2 * g);
        for (int i = 0; i < g; ++i) {
            j(i, g + i) = 1;
            j(g + i, i) = j.mod_ - 1;
        }
        return j;
    }

    long p() const { return p_; }
    long k() const { return k_; }
    int size() const { return n_; }
    std::int64_t modulus() const { return mod_; }

    std::int64_t& operator()(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
    std::int64_t operator()(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }

    std::int64_t reduce(std::int64_t x) const {
        x %= mod_;
        return x < 0 ? x + mod_ : x;
    }

    // same entries read modulo p^k2 (k2 <= k) or lifted by representatives (k2 > k)
    MatrixModPk with_level(long k2) const {
        MatrixModPk m(p_, k2, n_);
        for (size_t i = 0; i < a_.size(); ++i) m.a_[i] = m.reduce(a_[i]);
        return m;
    }

    friend MatrixModPk operator*(const MatrixModPk& a, const MatrixModPk& b) {
        require(a.n_ == b.n_ && a.mod_ == b.mod_, "MatrixModPk: shape mismatch");
        MatrixModPk c(a.p_, a.k_, a.n_);
        for (int i = 0; i < a.n_; ++i)
            for (int l = 0; l < a.n_; ++l) {
                const std::int64_t x = a(i, l);
                if (x == 0) continue;
                for (int j = 0; j < a.n_; ++j) c(i, j) = (c(i, j) + x * b(l, j)) % a.mod_;
            }
        return c;
    }
    friend MatrixModPk operator-(const MatrixModPk& a, const MatrixModPk& b) {
        require(a.n_ == b.n_ && a.mod_ == b.mod_, "MatrixModPk: shape mismatch");
        MatrixModPk c(a.p_, a.k_, a.n_);
        for (size_t i = 0; i < a.a_.size(); ++i) c.a_[i] = c.reduce(a.a_[i] - b.a_[i]);
        return c;
    }
    MatrixModPk transpose() const {
        MatrixModPk t(p_, k_, n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }
    friend bool operator==(const MatrixModPk& a, const MatrixModPk& b) {
        return a.mod_ == b.mod_ && a.n_ == b.n_ && a.a_ == b.a_;
    }

private:
    long p_, k_;
    int n_;
    std::int64_t mod_;
    std::vector<std::int64_t> a_;
};

inline bool is_symplectic(const MatrixModPk& a) {
    require(a.size() % 2 == 0, "is_symplectic: odd dimension");
    const auto j = MatrixModPk::symplectic_form(a.p(), a.k(), a.size() / 2);
    return a.transpose() * j * a == j;
}

namespace detail {

inline std::int64_t inv_mod(std::int64_t a, std::int64_t m) {
    Integer r, x(a), mm(m);
    if (!mpz_invert(r.get_mpz_t(), x.get_mpz_t(), mm.get_mpz_t())) throw std::domain_error("inv_mod: not a unit");
    return r.get_si();
}

using Vec = std::vector<std::int64_t>;

// omega(x, y) = x^T J y over F_p
inline std::int64_t omega(const Vec& x, const Vec& y, int g, long p) {
    std::int64_t s = 0;
    for (int i = 0; i < g; ++i) s += x[i] * y[g + i] - x[g + i] * y[i];
    s %= p;
    return s < 0 ? s + p : s;
}

// row-reduce a spanning set to a basis over F_p
inline std::vector<Vec> basis_of(std::vector<Vec> rows, long p) {
    std::vector<Vec> out;
    if (rows.empty()) return out;
    const size_t n = rows[0].size();
    size_t rank = 0;
    for (size_t c = 0; c < n && rank < rows.size(); ++c) {
        size_t piv = rank;
        while (piv < rows.size() && rows[piv][c] == 0) ++piv;
        if (piv == rows.size()) continue;
        std::swap(rows[rank], rows[piv]);
        const std::int64_t inv = inv_mod(rows[rank][c], p);
        for (auto& x : rows[rank]) x = x * inv % p;
        for (size_t i = 0; i < rows.size(); ++i) {
            if (i == rank || rows[i][c] == 0) continue;
            const std::int64_t f = rows[i][c];
            for (size_t j = 0; j < n; ++j) rows[i][j] = ((rows[i][j] - f * rows[rank][j]) % p + p) % p;
        }
        ++rank;
    }
    rows.resize(rank);
    return rows;
}

inline Vec random_combination(const std::vector<Vec>& basis, long p, KeyedStream& rng) {
    Vec v(basis[0].size(), 0);
    for (const auto& b : basis) {
        const auto c = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(p)));
        if (c == 0) continue;
        for (size_t j = 0; j < v.size(); ++j) v[j] = (v[j] + c * b[j]) % p;
    }
    return v;
}

inline bool is_zero(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](std::int64_t x) { return x == 0; });
}

// uniform element of Sp_2g(F_p) by hyperbolic-pair completion
inline MatrixModPk sample_sp_mod_p(long p, int g, KeyedStream& rng) {
    const int n = 2 * g;
    std::vector<Vec> w;
    for (int i = 0; i < n; ++i) {
        Vec e(static_cast<size_t>(n), 0);
        e[static_cast<size_t>(i)] = 1;
        w.push_back(std::move(e));
    }
    MatrixModPk a(p, 1, n);
    for (int step = 0; step < g; ++step) {
        Vec e, f;
        do e = random_combination(w, p, rng);
        while (is_zero(e));
        std::int64_t c = 0;
        do {
            f = random_combination(w, p, rng);
            c = omega(e, f, g, p);
        } while (c == 0);
        const std::int64_t ci = inv_mod(c, p);
        for (auto& x : f) x = x * ci % p;
        for (int i = 0; i < n; ++i) {
            a(i, step) = e[static_cast<size_t>(i)];
            a(i, g + step) = f[static_cast<size_t>(i)];
        }
        // project onto <e, f>^perp
        for (auto& v : w) {
            const std::int64_t wf = omega(v, f, g, p), we = omega(v, e, g, p);
            for (size_t j = 0; j < v.size(); ++j) v[j] = ((v[j] - wf * e[j] + we * f[j]) % p + p) % p;
        }
        w = basis_of(std::move(w), p);
    }
    return a;
}

// uniform lift of a (symplectic mod p^j) to Sp_2g(Z/p^{j+1})
inline MatrixModPk hensel_step(const MatrixModPk& a0, KeyedStream& rng) {
    const long p = a0.p();
    const long j = a0.k();
    const int n = a0.size(), g = n / 2;
    MatrixModPk a = a0.with_level(j + 1);
    const auto jf = MatrixModPk::symplectic_form(p, j + 1, g);
    const MatrixModPk defect = a.transpose() * jf * a - jf;
    const std::int64_t pj = a0.modulus();

    // Y = -(strict lower part of E) + S, with S symmetric
    MatrixModPk y(p, 1, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const std::int64_t e = defect(r, c);
            if (e % pj != 0) throw std::logic_error("hensel_step: input is not symplectic");
            if (r > c) y(r, c) = y.reduce(-(e / pj));
        }
    for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c) {
            const auto s = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(p)));
            y(r, c) = y.reduce(y(r, c) + s);
            if (c != r) y(c, r) = y.reduce(y(c, r) + s);
        }
    // X = (A0^T J)^{-1} Y = -A0 J Y  mod p
    const MatrixModPk a1 = a0.with_level(1);
    const auto j1 = MatrixModPk::symplectic_form(p, 1, g);
    const MatrixModPk x = MatrixModPk(p, 1, n) - a1 * j1 * y;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) a(r, c) = a.reduce(a(r, c) + pj * x(r, c));
    return a;
}

}  // namespace detail

// uniform over Sp_2g(Z/p^r)
inline MatrixModPk sample_sp(long p, long r, int g, KeyedStream& rng) {
    require(g >= 1, "sample_sp: g must be >= 1");
    require(r >= 1, "sample_sp: r must be >= 1");
    require(is_prime(p), "sample_sp: p must be prime");
    MatrixModPk a = detail::sample_sp_mod_p(p, g, rng);
    for (long j = 1; j < r; ++j) a = detail::hensel_step(a, rng);
    return a;
}

// uniform over matrices mod p^k that are symplectic mod p^r
inline MatrixModPk sample_sp_r(long p, long r, long k, int g, KeyedStream& rng) {
    if (k < r) throw std::invalid_argument("sample_sp_r: need k >= r");
    MatrixModPk a = sample_sp(p, r, g, rng).with_level(k);
    if (k == r) return a;
    const std::int64_t pr = ipow(p, static_cast<unsigned long>(r)).get_si();
    const auto span = static_cast<std::uint64_t>(a.modulus() / pr);
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < a.size(); ++j)
            a(i, j) = a.reduce(a(i, j) + pr * static_cast<std::int64_t>(rng.below(span)));
    return a;
}

inline long valuation(std::int64_t x, long p, long cap) {
    if (x == 0) return cap;
    long v = 0;
    while (x % p == 0) {
        x /= p;
        ++v;
    }
    return std::min(v, cap);
}

// exponent partition of coker(B) over Z/p^k, by pivoting on minimal valuation
inline Partition cokernel_exponents(MatrixModPk b) {
    const long p = b.p(), k = b.k();
    const int n = b.size();
    std::vector<long> exps;
    std::vector<int> rows(static_cast<size_t>(n)), cols(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) rows[static_cast<size_t>(i)] = cols[static_cast<size_t>(i)] = i;
    while (!rows.empty()) {
        long best = k;
        size_t bi = 0, bj = 0;
        for (size_t i = 0; i < rows.size() && best > 0; ++i)
            for (size_t j = 0; j < cols.size(); ++j) {
                const long v = valuation(b(rows[i], cols[j]), p, k);
                if (v < best) {
                    best = v;
                    bi = i;
                    bj = j;
                    if (v == 0) break;
                }
            }
        if (best == k) {
            for (size_t i = 0; i < rows.size(); ++i) exps.push_back(k);
            break;
        }
        if (best > 0) exps.push_back(best);
        const int pr = rows[bi], pc = cols[bj];
        const std::int64_t pv = ipow(p, static_cast<unsigned long>(best)).get_si();
        const std::int64_t unit_inv = detail::inv_mod(b(pr, pc) / pv % b.modulus(), b.modulus());
        for (size_t i = 0; i < rows.size(); ++i) {
            if (i == bi) continue;
            const int r = rows[i];
            const std::int64_t x = b(r, pc);
            if (x == 0) continue;
            const std::int64_t f = b.reduce((x / pv) % b.modulus() * unit_inv);
            for (size_t j = 0; j < cols.size(); ++j) {
                const int c = cols[j];
                b(r, c) = b.reduce(b(r, c) - f * b(pr, c) % b.modulus());
            }
        }
        // remaining row entries are cleared by column operations that touch no other row
        rows.erase(rows.begin() + static_cast<long>(bi));
        cols.erase(cols.begin() + static_cast<long>(bj));
    }
    return Partition::from_unsorted(std::move(exps));
}

inline Partition cokernel_shape(const MatrixModPk& a) {
    return cokernel_exponents(a - MatrixModPk::identity(a.p(), a.k(), a.size()));
}

// ---------------------------------------------------------------------------

struct Histogram {
    long p = 0, r = 0, k = 0;
    int g = 0;
    std::uint64_t seed = 0;
    long samples = 0;
    std::map<Partition, long> counts;  // keyed by exponent partition
};

inline std::string exponent_key(const Partition& e) {
    std::string s = "[";
    for (size_t i = 0; i < e.parts().size(); ++i) {
        if (i) s += ",";
        s += std::to_string(e.parts()[i]);
    }
    return s + "]";
}

inline Histogram run_experiment(long p, long r, long k, int g, long samples, std::uint64_t seed,
                                unsigned workers = 0) {
    if (k < r) throw std::invalid_argument("run_experiment: need k >= r");
    require(samples >= 1, "run_experiment: samples must be >= 1");
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<long>(workers, samples));

    std::vector<std::map<Partition, long>> local(workers);
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](unsigned w) {
        try {
            const long lo = samples * w / workers, hi = samples * (w + 1) / workers;
            for (long i = lo; i < hi; ++i) {
                KeyedStream rng(seed, static_cast<std::uint64_t>(i));
                ++local[w][cokernel_shape(sample_sp_r(p, r, k, g, rng))];
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work, w);
        work(0);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    Histogram h{p, r, k, g, seed, samples, {}};
    for (const auto& m : local)
        for (const auto& [shape, c] : m) h.counts[shape] += c;
    return h;
}

inline nlohmann::ordered_json histogram_json(const Histogram& h) {
    std::vector<std::pair<Partition, long>> rows(h.counts.begin(), h.counts.end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.first.total() != b.first.total()) return a.first.total() < b.first.total();
        return a.first.parts() < b.first.parts();
    });
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [shape, c] : rows) counts[exponent_key(shape)] = c;
    return {{"p", h.p}, {"r", h.r}, {"k", h.k}, {"g", h.g}, {"seed", h.seed}, {"samples", h.samples},
            {"counts", counts}};
}

// ---------------------------------------------------------------------------
// comparison with the g -> infinity law

// limiting probability that coker has the given exponent partition at level k
inline CertValue limit_prob(long p, long r, long k, const Partition& exponents, const Rational& tol = default_tol()) {
    return nu_dvr_selfdual(p, Rational(0), Rational(0), r, k, exponents.conjugate(), tol);
}

// |wedge^2 N[p^r]| for N with the given exponent partition
inline Integer limit_moment(long p, long r, const Partition& exponents) {
    const Partition lam = exponents.conjugate();
    long e = 0;
    for (long j = 1; j <= r; ++j) e += binom2(lam(j));
    return ipow(p, static_cast<unsigned long>(e));
}

struct ShapeStat {
    Partition exponents;
    long observed;
    double expected;
    double z;
};

struct BinStat {
    std::string label;
    long observed;
    double expected;
};

struct MomentEstimate {
    Partition target;
    double mean, sigma;
    Integer limit;
    double deviation_sigmas;
};

struct LimitComparison {
    std::vector<ShapeStat> shapes;  // every shape with a nonzero expectation or observation
    std::vector<BinStat> bins;      // after pooling
    double chi_square = 0;
    long dof = 0;
    double p_value = 1;
    double max_abs_z_large = 0;     // over shapes with expected >= 25
    double divergence = 0;          // max(0, chi_square - dof) / samples
    long pooled_shapes = 0;
    std::vector<MomentEstimate> moments;
};

inline MomentEstimate estimate_moment(const Histogram& h, const Partition& target_exponents) {
    const Partition tl = target_exponents.conjugate();
    double s1 = 0, s2 = 0;
    for (const auto& [shape, c] : h.counts) {
        const double v = sur_count(h.p, shape.conjugate(), tl).get_d();
        s1 += v * static_cast<double>(c);
        s2 += v * v * static_cast<double>(c);
    }
    const double n = static_cast<double>(h.samples);
    const double mean = s1 / n;
    const double var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
    const double sigma = std::sqrt(var / n);
    const Integer lim = limit_moment(h.p, h.r, target_exponents);
    const double dev = sigma > 0 ? std::abs(mean - lim.get_d()) / sigma : (mean == lim.get_d() ? 0.0 : INFINITY);
    return {target_exponents, mean, sigma, lim, dev};
}

// expected probabilities may be overridden (used to compare a histogram against itself)
inline LimitComparison compare_to_limit(const Histogram& h, const std::map<Partition, double>* override_probs = nullptr,
                                        const Rational& tol = default_tol()) {
    LimitComparison out;
    const double n = static_cast<double>(h.samples);
    std::map<Partition, double> probs;
    if (override_probs) {
        probs = *override_probs;
    } else {
        // shapes with at most 2g cyclic factors and exponents at most k
        for (long t = 0; t <= 2L * h.g * h.k; ++t)
            for (const auto& lam : partitions_of(t, h.k, 2L * h.g))
                probs[lam.conjugate()] = limit_prob(h.p, h.r, h.k, lam.conjugate(), tol).to_double();
    }
    double covered = 0;
    for (const auto& [e, pr] : probs) covered += pr;

    std::map<Partition, long> obs = h.counts;
    for (const auto& [e, pr] : probs) obs.try_emplace(e, 0);
    BinStat pooled{"pooled", 0, 0.0};
    for (const auto& [e, c] : obs) {
        auto it = probs.find(e);
        const double pr = it == probs.end() ? 0.0 : it->second;
        const double ex = n * pr;
        const double z = ex > 0 ? (static_cast<double>(c) - ex) / std::sqrt(ex * (1 - pr)) : (c > 0 ? INFINITY : 0.0);
        out.shapes.push_back({e, c, ex, z});
        if (ex >= 25) out.max_abs_z_large = std::max(out.max_abs_z_large, std::abs(z));
        if (ex >= 5) {
            out.bins.push_back({exponent_key(e), c, ex});
        } else {
            pooled.observed += c;
            pooled.expected += ex;
            ++out.pooled_shapes;
        }
    }
    // probability mass outside the enumerated shapes
    pooled.expected += n * std::max(0.0, 1.0 - covered);
    if (pooled.observed > 0 || pooled.expected > 0) out.bins.push_back(pooled);

    for (const auto& b : out.bins) {
        if (b.expected > 0) {
            const double d = static_cast<double>(b.observed) - b.expected;
            out.chi_square += d * d / b.expected;
        } else if (b.observed > 0) {
            out.chi_square = INFINITY;
        }
    }
    out.dof = std::max<long>(1, static_cast<long>(out.bins.size()) - 1);
    if (std::isfinite(out.chi_square)) {
        boost::math::chi_squared dist(static_cast<double>(out.dof));
        out.p_value = boost::math::cdf(boost::math::complement(dist, out.chi_square));
    } else {
        out.p_value = 0;
    }
    out.divergence = std::max(0.0, out.chi_square - static_cast<double>(out.dof)) / n;
    out.moments.push_back(estimate_moment(h, Partition{1}));
    return out;
}

inline nlohmann::ordered_json comparison_json(const LimitComparison& c) {
    nlohmann::ordered_json shapes = nlohmann::ordered_json::array();
    for (const auto& s : c.shapes) {
        if (s.expected < 1e-9 && s.observed == 0) continue;
        shapes.push_back({{"shape", exponent_key(s.exponents)},
                          {"observed", s.observed},
                          {"expected", s.expected},
                          {"z", std::isfinite(s.z) ? nlohmann::ordered_json(s.z) : nlohmann::ordered_json("inf")}});
    }
    nlohmann::ordered_json bins = nlohmann::ordered_json::array();
    for (const auto& b : c.bins) bins.push_back({{"bin", b.label}, {"observed", b.observed}, {"expected", b.expected}});
    nlohmann::ordered_json moments = nlohmann::ordered_json::array();
    for (const auto& m : c.moments)
        moments.push_back({{"target", exponent_key(m.target)},
                           {"mean", m.mean},
                           {"sigma", m.sigma},
                           {"limit", m.limit.get_str()},
                           {"deviation_sigmas", m.deviation_sigmas}});
    return {{"chi_square", c.chi_square},
            {"dof", c.dof},
            {"p_value", c.p_value},
            {"max_abs_z_expected_ge_25", c.max_abs_z_large},
            {"pooled_shapes", c.pooled_shapes},
            {"divergence", c.divergence},
            {"bins", bins},
            {"shapes", shapes},
            {"moments", moments}};
}

struct ScanPoint {
    int g;
    double divergence;
    double chi_square;
    long dof;
};

inline std::vector<ScanPoint> convergence_scan(long p, long r, long k, const std::vector<int>& gs, long samples,
                                               std::uint64_t seed, unsigned workers = 0) {
    std::vector<ScanPoint> out;
    for (int g : gs) {
        const auto c = compare_to_limit(run_experiment(p, r, k, g, samples, seed, workers));
        out.push_back({g, c.divergence, c.chi_square, c.dof});
    }
    return out;
}

}  // namespace clm
