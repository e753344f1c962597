#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lerw {

// Exact dyadic rational num / 2^k, normalized so that k == 0 or num is odd.
// All lattice geometry (ball radii, slab bounds, tube planes) is stored in
// this form so that containment tests reduce to integer comparisons.
struct Dyadic {
    long long num = 0;
    int k = 0;

    constexpr Dyadic() = default;
    constexpr Dyadic(long long n) : num(n), k(0) {}
    Dyadic(long long n, int denom_pow) : num(n), k(denom_pow) {
        if (denom_pow < 0 || denom_pow > 62) throw std::invalid_argument("dyadic: exponent out of range");
        normalize();
    }

    void normalize() {
        while (k > 0 && (num & 1) == 0) { num >>= 1; --k; }
        if (num == 0) k = 0;
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(1LL << k); }

    bool is_zero() const { return num == 0; }
    Dyadic operator-() const { Dyadic d; d.num = -num; d.k = k; return d; }

    friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
        int kk = a.k > b.k ? a.k : b.k;
        __int128 s = (__int128)a.num << (kk - a.k);
        s += (__int128)b.num << (kk - b.k);
        if (s > INT64_MAX || s < INT64_MIN) throw std::overflow_error("dyadic add overflow");
        return Dyadic((long long)s, kk);
    }
    friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }
    friend Dyadic operator*(const Dyadic& a, const Dyadic& b) {
        __int128 p = (__int128)a.num * b.num;
        if (p > INT64_MAX || p < INT64_MIN) throw std::overflow_error("dyadic mul overflow");
        return Dyadic((long long)p, a.k + b.k);
    }

    // Exact value comparison via cross-multiplication.
    friend int cmp(const Dyadic& a, const Dyadic& b) {
        int kk = a.k > b.k ? a.k : b.k;
        __int128 x = (__int128)a.num << (kk - a.k);
        __int128 y = (__int128)b.num << (kk - b.k);
        return x < y ? -1 : (x > y ? 1 : 0);
    }
    friend bool operator<(const Dyadic& a, const Dyadic& b) { return cmp(a, b) < 0; }
    friend bool operator<=(const Dyadic& a, const Dyadic& b) { return cmp(a, b) <= 0; }
    friend bool operator>(const Dyadic& a, const Dyadic& b) { return cmp(a, b) > 0; }
    friend bool operator>=(const Dyadic& a, const Dyadic& b) { return cmp(a, b) >= 0; }
    friend bool operator==(const Dyadic& a, const Dyadic& b) { return cmp(a, b) == 0; }
    friend bool operator!=(const Dyadic& a, const Dyadic& b) { return cmp(a, b) != 0; }

    // Multiply by 2^j (j may be negative).
    Dyadic shifted(int j) const {
        Dyadic d = *this;
        if (d.num == 0) return d;
        if (j >= 0) {
            if (d.k >= j) { d.k -= j; }
            else {
                int up = j - d.k;
                if (up > 40) throw std::overflow_error("dyadic shift overflow");
                d.k = 0;
                d.num <<= up;
            }
        } else {
            d.k += -j;
            if (d.k > 62) throw std::overflow_error("dyadic shift underflow");
        }
        d.normalize();
        return d;
    }

    // Numerator after bringing the value to denominator 2^target_k.
    // Requires k <= target_k (value exactly representable at that grid).
    long long scaled_num(int target_k) const {
        if (k > target_k) throw std::invalid_argument("dyadic: value not representable at requested grid");
        __int128 s = (__int128)num << (target_k - k);
        if (s > INT64_MAX || s < INT64_MIN) throw std::overflow_error("dyadic scale overflow");
        return (long long)s;
    }

    bool representable_at(int target_k) const { return k <= target_k; }

    std::string str() const {
        if (k == 0) return std::to_string(num);
        return std::to_string(num) + "/2^" + std::to_string(k);
    }
};

// Parses "p", "p/q" with q a power of two, or "p/2^k".
inline Dyadic parse_dyadic(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return Dyadic(std::stoll(s), 0);
    long long p = std::stoll(s.substr(0, slash));
    std::string den = s.substr(slash + 1);
    if (den.rfind("2^", 0) == 0) return Dyadic(p, std::stoi(den.substr(2)));
    long long q = std::stoll(den);
    if (q <= 0 || (q & (q - 1)) != 0) throw std::invalid_argument("dyadic parse: denominator must be a power of two");
    int k = 0;
    while ((1LL << k) < q) ++k;
    return Dyadic(p, k);
}

} // namespace lerw
