#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cmhj/errors.hpp"

namespace cmhj {

/// Time partition t_0 < t_1 < ... < t_n.
struct Partition {
    std::vector<double> times;

    Partition() = default;
    explicit Partition(std::vector<double> t) : times(std::move(t)) { validate(); }

    static Partition uniform(double s, double t, int n) {
        if (n < 1 || !(t > s)) throw Error(ErrorKind::config, "uniform partition needs n >= 1 and t > s");
        std::vector<double> ts(n + 1);
        for (int i = 0; i <= n; ++i) ts[i] = s + (t - s) * i / n;
        ts[n] = t;
        return Partition(std::move(ts));
    }

    /// Uniform partition of [0, T] with norm <= h (exactly T/ceil(T/h)).
    static Partition with_norm(double T, double h) {
        if (!(h > 0)) throw Error(ErrorKind::config, "partition norm must be positive");
        return uniform(0.0, T, std::max(1, static_cast<int>(std::ceil(T / h - 1e-9))));
    }

    void validate() const {
        if (times.size() < 2) throw Error(ErrorKind::config, "partition needs at least two times");
        for (std::size_t i = 0; i + 1 < times.size(); ++i)
            if (!(times[i + 1] > times[i]))
                throw Error(ErrorKind::config, "partition times must increase strictly (index " +
                                                   std::to_string(i + 1) + ")");
    }

    int steps() const { return static_cast<int>(times.size()) - 1; }
    double start() const { return times.front(); }
    double end() const { return times.back(); }

    /// |zeta| = max gap.
    double norm() const {
        double m = 0.0;
        for (std::size_t i = 0; i + 1 < times.size(); ++i) m = std::max(m, times[i + 1] - times[i]);
        return m;
    }

    /// zeta(s) = max{t_i <= s}.
    double step_fn(double s) const {
        auto it = std::upper_bound(times.begin(), times.end(), s);
        if (it == times.begin()) throw Error(ErrorKind::domain, "time before the partition start");
        return *(it - 1);
    }

    /// Each gap split uniformly so that every piece is shorter than `limit`.
    Partition subdivided(double limit) const {
        std::vector<double> out{times.front()};
        for (std::size_t i = 0; i + 1 < times.size(); ++i) {
            const double g = times[i + 1] - times[i];
            const int m = std::max(1, static_cast<int>(std::floor(g / limit)) + 1);
            for (int k = 1; k < m; ++k) out.push_back(times[i] + g * k / m);
            out.push_back(times[i + 1]);
        }
        return Partition(std::move(out));
    }
};

}  // namespace cmhj
