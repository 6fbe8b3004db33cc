#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace clm {

using Integer = mpz_class;
using Rational = mpq_class;

// mpq's two-argument constructor does not reduce
inline Rational ratio(const Integer& n, const Integer& d) {
    Rational r(n, d);
    r.canonicalize();
    return r;
}

inline void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

inline Integer ipow(long base, unsigned long e) {
    Integer r;
    mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(base), e);
    return r;
}

// q^e for any integer e
inline Rational qpow(long q, long e) {
    if (e >= 0) return Rational(ipow(q, static_cast<unsigned long>(e)));
    return Rational(Integer(1), ipow(q, static_cast<unsigned long>(-e)));
}

inline bool is_integral(const Rational& x) { return x.get_den() == 1; }

inline Integer to_integer(const Rational& x, const char* what = "value is not an integer") {
    if (!is_integral(x)) throw std::logic_error(what);
    return x.get_num();
}

inline bool perfect_square(long q, long* root = nullptr) {
    Integer z(q);
    if (!mpz_perfect_square_p(z.get_mpz_t())) return false;
    if (root) {
        Integer s;
        mpz_sqrt(s.get_mpz_t(), z.get_mpz_t());
        *root = s.get_si();
    }
    return true;
}

inline bool is_prime(long p) {
    if (p < 2) return false;
    for (long d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

// p^d == q with p prime; returns {p, d} or {0, 0}
inline std::pair<long, int> prime_power(long q) {
    if (q < 2) return {0, 0};
    long p = 2;
    while (q % p) ++p;
    int d = 0;
    long x = q;
    while (x % p == 0) { x /= p; ++d; }
    if (x != 1) return {0, 0};
    return {p, d};
}

inline Rational eta(long q, long k) {
    require(q >= 2, "eta: base q must be >= 2");
    require(k >= 0, "eta: k must be non-negative");
    Rational r(1);
    Rational x(1);
    for (long i = 1; i <= k; ++i) {
        x /= q;
        r *= (1 - x);
    }
    return r;
}

inline Rational qbinom(long q, long n, long k) {
    require(q >= 2, "qbinom: base q must be >= 2");
    if (n < 0 || k < 0 || k > n) return Rational(0);
    return eta(q, n) / (eta(q, k) * eta(q, n - k));
}

inline long binom2(long n) { return n * (n - 1) / 2; }

// ---------------------------------------------------------------------------
// Outward rounding to dyadic rationals with a relative precision of `bits`.

namespace detail {

inline long floor_log2(const Rational& ax) {
    // approximate floor(log2 |x|), off by at most one
    long nb = static_cast<long>(mpz_sizeinbase(ax.get_num_mpz_t(), 2));
    long db = static_cast<long>(mpz_sizeinbase(ax.get_den_mpz_t(), 2));
    return nb - db;
}

inline Rational round_dir(const Rational& x, int bits, bool up) {
    if (x == 0) return x;
    long s = bits - floor_log2(abs(x));
    Integer num = x.get_num(), den = x.get_den();
    if (s >= 0) num <<= static_cast<mp_bitcnt_t>(s);
    else den <<= static_cast<mp_bitcnt_t>(-s);
    Integer q;
    if (up) mpz_cdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    else mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    Rational r(q);
    if (s >= 0) mpq_div_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(s));
    else mpq_mul_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(-s));
    return r;
}

}  // namespace detail

inline Rational round_down(const Rational& x, int bits) { return detail::round_dir(x, bits, false); }
inline Rational round_up(const Rational& x, int bits) { return detail::round_dir(x, bits, true); }

// ---------------------------------------------------------------------------

class CertValue {
public:
    CertValue() : lo_(0), hi_(0) {}
    explicit CertValue(const Rational& x) : lo_(x), hi_(x) {}
    CertValue(Rational lo, Rational hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
        if (lo_ > hi_) throw std::logic_error("CertValue: lo > hi");
    }

    const Rational& lo() const { return lo_; }
    const Rational& hi() const { return hi_; }
    Rational width() const { return hi_ - lo_; }
    Rational mid() const { return (lo_ + hi_) / 2; }
    double to_double() const { return mid().get_d(); }
    bool is_point() const { return lo_ == hi_; }
    bool is_zero() const { return lo_ == 0 && hi_ == 0; }
    bool contains(const Rational& x) const { return lo_ <= x && x <= hi_; }
    bool contains(const CertValue& o) const { return lo_ <= o.lo_ && o.hi_ <= hi_; }
    bool positive() const { return lo_ > 0; }

    CertValue rounded(int bits) const { return {round_down(lo_, bits), round_up(hi_, bits)}; }

    CertValue operator-() const { return {-hi_, -lo_}; }

    friend CertValue operator+(const CertValue& a, const CertValue& b) {
        return {a.lo_ + b.lo_, a.hi_ + b.hi_};
    }
    friend CertValue operator-(const CertValue& a, const CertValue& b) {
        return {a.lo_ - b.hi_, a.hi_ - b.lo_};
    }
    friend CertValue operator*(const CertValue& a, const CertValue& b) {
        if (a.lo_ >= 0 && b.lo_ >= 0) return {a.lo_ * b.lo_, a.hi_ * b.hi_};
        Rational c[4] = {a.lo_ * b.lo_, a.lo_ * b.hi_, a.hi_ * b.lo_, a.hi_ * b.hi_};
        return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
    }
    friend CertValue operator*(const CertValue& a, const Rational& s) {
        if (s >= 0) return {a.lo_ * s, a.hi_ * s};
        return {a.hi_ * s, a.lo_ * s};
    }
    CertValue inverse() const {
        if (lo_ <= 0 && hi_ >= 0) throw std::domain_error("CertValue: inverse of interval containing 0");
        return {1 / hi_, 1 / lo_};
    }
    friend CertValue operator/(const CertValue& a, const CertValue& b) { return a * b.inverse(); }

    CertValue& operator+=(const CertValue& o) { return *this = *this + o; }
    CertValue& operator*=(const CertValue& o) { return *this = *this * o; }

    friend bool operator==(const CertValue&, const CertValue&) = default;

private:
    Rational lo_, hi_;
};

// ---------------------------------------------------------------------------
// a + b*sqrt(q)

class QNum {
public:
    QNum() : q_(1), a_(0), b_(0) {}
    QNum(const Rational& a) : q_(1), a_(a), b_(0) { a_.canonicalize(); }  // NOLINT: rationals embed
    QNum(int a) : QNum(Rational(a)) {}                 // NOLINT
    QNum(long q, Rational a, Rational b) : q_(q), a_(std::move(a)), b_(std::move(b)) {
        require(q >= 1, "QNum: base must be positive");
        normalize();
    }

    // q^(e/2)
    static QNum pow_half(long q, long twice_exp) {
        require(q >= 2, "QNum::pow_half: base must be >= 2");
        long e = twice_exp;
        if (e % 2 == 0) return QNum(qpow(q, e / 2));
        // e odd: q^((e-1)/2) * sqrt(q)
        long h = (e - 1) / 2;
        return QNum(q, Rational(0), qpow(q, h));
    }
    // q^x for x with 2x integral
    static QNum qpow_rat(long q, const Rational& x) {
        Rational t = 2 * x;
        if (!is_integral(t)) throw std::domain_error("QNum: exponent must be a half-integer");
        return pow_half(q, t.get_num().get_si());
    }

    long base() const { return q_; }
    const Rational& a() const { return a_; }
    const Rational& b() const { return b_; }
    bool is_rational() const { return b_ == 0; }
    Rational rational() const {
        if (!is_rational()) throw std::logic_error("QNum: value is irrational");
        return a_;
    }
    bool is_zero() const { return a_ == 0 && b_ == 0; }

    int sign() const {
        int sa = sgn(a_), sb = sgn(b_);
        if (sb == 0) return sa;
        if (sa == 0) return sb;
        if (sa == sb) return sa;
        // a and b*sqrt(q) have opposite signs
        Rational lhs = a_ * a_, rhs = b_ * b_ * q_;
        if (lhs == rhs) return 0;
        return lhs > rhs ? sa : sb;
    }

    Rational norm() const { return a_ * a_ - b_ * b_ * q_; }

    QNum inverse() const {
        Rational n = norm();
        if (n == 0) throw std::domain_error("QNum: inverse of zero-norm element");
        return QNum(q_, a_ / n, -b_ / n);
    }

    friend QNum operator+(const QNum& x, const QNum& y) {
        long q = common(x, y);
        return QNum(q, x.a_ + y.a_, x.b_ + y.b_);
    }
    friend QNum operator-(const QNum& x, const QNum& y) {
        long q = common(x, y);
        return QNum(q, x.a_ - y.a_, x.b_ - y.b_);
    }
    QNum operator-() const { return QNum(q_, -a_, -b_); }
    friend QNum operator*(const QNum& x, const QNum& y) {
        long q = common(x, y);
        return QNum(q, x.a_ * y.a_ + x.b_ * y.b_ * q, x.a_ * y.b_ + x.b_ * y.a_);
    }
    friend QNum operator/(const QNum& x, const QNum& y) { return x * y.inverse(); }
    QNum& operator+=(const QNum& o) { return *this = *this + o; }
    QNum& operator-=(const QNum& o) { return *this = *this - o; }
    QNum& operator*=(const QNum& o) { return *this = *this * o; }
    QNum& operator/=(const QNum& o) { return *this = *this / o; }

    friend bool operator==(const QNum& x, const QNum& y) {
        if (x.b_ == 0 && y.b_ == 0) return x.a_ == y.a_;
        return x.q_ == y.q_ && x.a_ == y.a_ && x.b_ == y.b_;
    }

    // rigorous rational enclosure
    CertValue enclose(int bits = 256) const {
        if (b_ == 0) return CertValue(a_);
        // sqrt(q) in [s, s+1] / 2^bits
        Integer big = Integer(q_) << static_cast<mp_bitcnt_t>(2 * bits);
        Integer s;
        mpz_sqrt(s.get_mpz_t(), big.get_mpz_t());
        Rational lo(s), hi(s + 1);
        mpq_div_2exp(lo.get_mpq_t(), lo.get_mpq_t(), static_cast<mp_bitcnt_t>(bits));
        mpq_div_2exp(hi.get_mpq_t(), hi.get_mpq_t(), static_cast<mp_bitcnt_t>(bits));
        return (CertValue(lo, hi) * b_ + CertValue(a_)).rounded(bits);
    }

    double to_double() const { return enclose(80).to_double(); }

    std::string str() const {
        if (b_ == 0) return a_.get_str();
        std::string s = a_ == 0 ? std::string() : a_.get_str() + (b_ > 0 ? "+" : "");
        return s + b_.get_str() + "*sqrt(" + std::to_string(q_) + ")";
    }

private:
    static long common(const QNum& x, const QNum& y) {
        if (x.b_ == 0) return y.q_;
        if (y.b_ == 0) return x.q_;
        if (x.q_ != y.q_) throw std::domain_error("QNum: mixed quadratic bases");
        return x.q_;
    }
    // base reduced to its square-free part so equal numbers compare equal
    void normalize() {
        a_.canonicalize();
        b_.canonicalize();
        if (b_ == 0) {
            q_ = 1;
            return;
        }
        long s = 1;
        for (long f = 2; f * f <= q_; ++f)
            while (q_ % (f * f) == 0) {
                q_ /= f * f;
                s *= f;
            }
        b_ *= s;
        if (q_ == 1) {
            a_ += b_;
            b_ = 0;
        }
    }

    long q_;
    Rational a_, b_;
};

// ---------------------------------------------------------------------------
// prod_{l>=0} (1 + sign*q^(-a-l))^power, a half-integer > 0

struct InfFactor {
    long q;
    Rational a;
    int sign;
    int power;

    friend bool operator==(const InfFactor& x, const InfFactor& y) {
        return x.q == y.q && x.a == y.a && x.sign == y.sign && x.power == y.power;
    }
    friend bool operator<(const InfFactor& x, const InfFactor& y) {
        if (x.q != y.q) return x.q < y.q;
        if (x.a != y.a) return x.a < y.a;
        if (x.sign != y.sign) return x.sign < y.sign;
        return x.power < y.power;
    }
};

inline int bits_for(const Rational& tol) {
    // enough binary digits to resolve tol with margin
    long b = -detail::floor_log2(tol);
    return static_cast<int>(std::max<long>(64, b + 40));
}

inline CertValue inf_product(long q, const Rational& a, int sign, int power, const Rational& tol) {
    require(q >= 2, "inf_product: base q must be >= 2");
    require(a > 0, "inf_product: offset a must be positive");
    require(sign == 1 || sign == -1, "inf_product: sign must be +-1");
    require(power == 1 || power == -1, "inf_product: power must be +-1");
    require(tol > 0, "inf_product: tol must be positive");
    if (!is_integral(2 * a)) throw std::domain_error("inf_product: offset must be a half-integer");

    const int bits = bits_for(tol);
    const long twice_a = Rational(2 * a).get_num().get_si();
    const Rational one(1);

    CertValue partial(one);
    long l = 0;
    long next_check = 8;
    while (true) {
        CertValue x = QNum::pow_half(q, -(twice_a + 2 * l)).enclose(bits);
        CertValue f = CertValue(one) + (sign > 0 ? x : -x);
        partial = (partial * f).rounded(bits);
        ++l;
        if (l < next_check) continue;
        next_check = l + 4;
        // tail l.. : sum x_m <= x_l / (1 - 1/q)
        Rational xs = QNum::pow_half(q, -(twice_a + 2 * l)).enclose(bits).hi();
        Rational s = xs / (one - Rational(1, q));
        if (s >= Rational(1, 2)) continue;
        CertValue tail = sign > 0 ? CertValue(one, round_up(one / (one - s), bits))
                                  : CertValue(round_down(one - s, bits), one);
        CertValue full = (partial * tail).rounded(bits);
        if (power < 0) full = full.inverse().rounded(bits);
        if (full.width() <= tol) return full;
    }
}

inline CertValue eta_inf(long q, const Rational& tol) {
    require(tol > 0, "eta_inf: tol must be positive");
    return inf_product(q, Rational(1), -1, 1, tol);
}

// exact QNum times a finite list of certified infinite products
class Factored {
public:
    Factored() : exact_(1) {}
    Factored(QNum exact) : exact_(std::move(exact)) {}  // NOLINT

    static Factored zero() { return Factored(QNum(0)); }

    const QNum& exact() const { return exact_; }
    const std::vector<InfFactor>& infinite() const { return inf_; }
    bool is_zero() const { return exact_.is_zero(); }

    Factored& operator*=(const QNum& x) {
        exact_ *= x;
        return *this;
    }
    Factored& operator*=(InfFactor f) {
        f.a.canonicalize();
        inf_.push_back(std::move(f));
        return *this;
    }
    Factored& operator*=(const Factored& o) {
        exact_ *= o.exact_;
        for (const auto& f : o.inf_) *this *= f;
        return *this;
    }
    friend Factored operator*(Factored x, const Factored& y) { return x *= y; }

    // infinite factors as a sorted multiset with reciprocal pairs cancelled
    std::vector<InfFactor> reduced_infinite() const {
        std::vector<InfFactor> v = inf_;
        std::sort(v.begin(), v.end());
        std::vector<InfFactor> out;
        for (const auto& f : v) {
            auto inv = f;
            inv.power = -f.power;
            auto it = std::find(out.begin(), out.end(), inv);
            if (it != out.end()) out.erase(it);
            else out.push_back(f);
        }
        return out;
    }

    CertValue evaluate(const Rational& tol) const {
        require(tol > 0, "evaluate: tol must be positive");
        if (exact_.is_zero()) return CertValue(Rational(0));
        auto factors = reduced_infinite();
        Rational mag = abs(exact_.enclose(64).hi()) + 1;
        Rational t = tol / (16 * (static_cast<long>(factors.size()) + 1) * mag);
        for (int attempt = 0; attempt < 8; ++attempt) {
            int bits = bits_for(t);
            CertValue v = exact_.enclose(bits);
            for (const auto& f : factors) v = (v * inf_product(f.q, f.a, f.sign, f.power, t)).rounded(bits);
            if (v.width() <= tol) return v;
            t /= 1024;
        }
        throw std::runtime_error("evaluate: could not reach requested tolerance");
    }

private:
    QNum exact_;
    std::vector<InfFactor> inf_;
};

inline InfFactor eta_inf_factor(long q) { return InfFactor{q, Rational(1), -1, 1}; }

}  // namespace clm
