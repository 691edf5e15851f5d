#ifndef HITSTAT_RATIONAL_HPP
#define HITSTAT_RATIONAL_HPP

#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace hitstat {

// Small exact rational used to keep periodic orbits of the integer-slope maps
// free of floating drift. Overflow is detected, not silently wrapped.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (den == 0) throw std::invalid_argument("Rational: zero denominator");
        if (den < 0) { num = -num; den = -den; }
        reduce();
    }

    void reduce() {
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
    }
};

inline Rational operator-(const Rational& a, const Rational& b) {
    const __int128 n = static_cast<__int128>(a.num) * b.den - static_cast<__int128>(b.num) * a.den;
    const __int128 d = static_cast<__int128>(a.den) * b.den;
    if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX) throw std::overflow_error("Rational overflow");
    return Rational(static_cast<std::int64_t>(n), static_cast<std::int64_t>(d));
}

inline Rational abs(const Rational& a) { return a.num < 0 ? Rational(-a.num, a.den) : a; }

// r * k mod 1, exact; k small positive integer
inline Rational scale_mod_one(const Rational& r, std::int64_t k) {
    const __int128 wide = static_cast<__int128>(r.num) * k;
    if (wide > INT64_MAX || wide < INT64_MIN) throw std::overflow_error("Rational overflow");
    std::int64_t n = static_cast<std::int64_t>(wide) % r.den;
    if (n < 0) n += r.den;
    return Rational(n, r.den);
}

} // namespace hitstat

#endif
