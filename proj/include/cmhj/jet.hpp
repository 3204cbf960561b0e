#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>

#include "cmhj/errors.hpp"

namespace cmhj {

template <int K>
using Vec = std::array<double, K>;

template <std::size_t K>
inline std::array<double, K> operator+(const std::array<double, K>& a, const std::array<double, K>& b) {
    std::array<double, K> r;
    for (std::size_t i = 0; i < K; ++i) r[i] = a[i] + b[i];
    return r;
}

template <std::size_t K>
inline std::array<double, K> operator-(const std::array<double, K>& a, const std::array<double, K>& b) {
    std::array<double, K> r;
    for (std::size_t i = 0; i < K; ++i) r[i] = a[i] - b[i];
    return r;
}

template <std::size_t K>
inline std::array<double, K> operator*(double s, const std::array<double, K>& a) {
    std::array<double, K> r;
    for (std::size_t i = 0; i < K; ++i) r[i] = s * a[i];
    return r;
}

template <std::size_t K>
inline double dot(const std::array<double, K>& a, const std::array<double, K>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < K; ++i) s += a[i] * b[i];
    return s;
}

template <std::size_t K>
inline double norm(const std::array<double, K>& a) { return std::sqrt(dot(a, a)); }

template <std::size_t K>
inline double max_abs(const std::array<double, K>& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < K; ++i) m = std::max(m, std::abs(a[i]));
    return m;
}

template <std::size_t K>
inline std::array<double, K> splat(double s) {
    std::array<double, K> r;
    r.fill(s);
    return r;
}

/// A point (x, y, z) of the 1-jet space J^1 R^K.
template <int K>
struct JetPoint {
    Vec<K> x{};
    Vec<K> y{};
    double z = 0.0;

    static constexpr int dim = 2 * K + 1;

    double& operator[](int i) { return i < K ? x[i] : (i < 2 * K ? y[i - K] : z); }
    double operator[](int i) const { return i < K ? x[i] : (i < 2 * K ? y[i - K] : z); }

    bool finite() const {
        for (int i = 0; i < dim; ++i)
            if (!std::isfinite((*this)[i])) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (int i = 0; i < dim; ++i) m = std::max(m, std::abs((*this)[i]));
        return m;
    }

    std::string str() const {
        std::ostringstream os;
        os.precision(17);
        os << "(x=";
        for (int i = 0; i < K; ++i) os << (i ? "," : "") << x[i];
        os << "; y=";
        for (int i = 0; i < K; ++i) os << (i ? "," : "") << y[i];
        os << "; z=" << z << ")";
        return os.str();
    }
};

/// Time interval [s, t]. Backward intervals (t < s) are allowed for flows only.
struct TimeInterval {
    double s = 0.0;
    double t = 0.0;

    double length() const { return t - s; }

    void validate() const {
        if (!(std::isfinite(s) && std::isfinite(t)) || s < 0.0 || !(s < t))
            throw Error(ErrorKind::domain, "time interval requires 0 <= s < t");
    }
};

}  // namespace cmhj
