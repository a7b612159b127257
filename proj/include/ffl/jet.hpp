#pragma once

#include <cmath>

// Nested forward-mode jets over two seed directions. Nesting k levels gives
// exact mixed partial derivatives up to order k of any expression built from
// the operations below. Partial-derivative coefficients are evaluated in the
// inner type so nesting composes correctly.

namespace ffl {

template <class T>
struct Jet {
    T v{};
    T d[2]{};

    Jet() = default;
    Jet(double c) : v(c), d{T(0.0), T(0.0)} {}
    Jet(const T& value, const T& d0, const T& d1) : v(value), d{d0, d1} {}
};

using J1 = Jet<double>;
using J2 = Jet<J1>;
using J3 = Jet<J2>;
using J4 = Jet<J3>;

template <class T>
inline Jet<T> operator+(const Jet<T>& a, const Jet<T>& b) {
    return {a.v + b.v, a.d[0] + b.d[0], a.d[1] + b.d[1]};
}
template <class T>
inline Jet<T> operator-(const Jet<T>& a, const Jet<T>& b) {
    return {a.v - b.v, a.d[0] - b.d[0], a.d[1] - b.d[1]};
}
template <class T>
inline Jet<T> operator-(const Jet<T>& a) {
    return {-a.v, -a.d[0], -a.d[1]};
}
template <class T>
inline Jet<T> operator*(const Jet<T>& a, const Jet<T>& b) {
    return {a.v * b.v, a.d[0] * b.v + a.v * b.d[0], a.d[1] * b.v + a.v * b.d[1]};
}
template <class T>
inline Jet<T> operator/(const Jet<T>& a, const Jet<T>& b) {
    T inv = T(1.0) / b.v;
    T q = a.v * inv;
    return {q, (a.d[0] - q * b.d[0]) * inv, (a.d[1] - q * b.d[1]) * inv};
}

template <class T> inline Jet<T> operator+(const Jet<T>& a, double c) { return a + Jet<T>(c); }
template <class T> inline Jet<T> operator+(double c, const Jet<T>& a) { return Jet<T>(c) + a; }
template <class T> inline Jet<T> operator-(const Jet<T>& a, double c) { return a - Jet<T>(c); }
template <class T> inline Jet<T> operator-(double c, const Jet<T>& a) { return Jet<T>(c) - a; }
template <class T>
inline Jet<T> operator*(const Jet<T>& a, double c) {
    return {a.v * c, a.d[0] * c, a.d[1] * c};
}
template <class T> inline Jet<T> operator*(double c, const Jet<T>& a) { return a * c; }
template <class T> inline Jet<T> operator/(const Jet<T>& a, double c) { return a * (1.0 / c); }
template <class T> inline Jet<T> operator/(double c, const Jet<T>& a) { return Jet<T>(c) / a; }

inline double value_of(double x) { return x; }
template <class T>
inline double value_of(const Jet<T>& a) { return value_of(a.v); }

using std::atan2;
using std::cos;
using std::exp;
using std::log;
using std::sin;
using std::sqrt;

template <class T>
inline Jet<T> sqrt(const Jet<T>& a) {
    T s = sqrt(a.v);
    T c = T(0.5) / s;
    return {s, c * a.d[0], c * a.d[1]};
}
template <class T>
inline Jet<T> exp(const Jet<T>& a) {
    T e = exp(a.v);
    return {e, e * a.d[0], e * a.d[1]};
}
template <class T>
inline Jet<T> log(const Jet<T>& a) {
    T inv = T(1.0) / a.v;
    return {log(a.v), inv * a.d[0], inv * a.d[1]};
}
template <class T>
inline Jet<T> sin(const Jet<T>& a) {
    T s = sin(a.v), c = cos(a.v);
    return {s, c * a.d[0], c * a.d[1]};
}
template <class T>
inline Jet<T> cos(const Jet<T>& a) {
    T s = sin(a.v), c = cos(a.v);
    return {c, -(s * a.d[0]), -(s * a.d[1])};
}
template <class T>
inline Jet<T> atan2(const Jet<T>& y, const Jet<T>& x) {
    T inv = T(1.0) / (x.v * x.v + y.v * y.v);
    return {atan2(y.v, x.v), (x.v * y.d[0] - y.v * x.d[0]) * inv,
            (x.v * y.d[1] - y.v * x.d[1]) * inv};
}

template <class T>
inline T sq(const T& a) { return a * a; }

}  // namespace ffl
