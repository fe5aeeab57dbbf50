#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tem {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Single error type for the whole library; messages carry the context
/// (file, line number, offending key/id) the caller needs.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dot products are clamped to this magnitude before exponentiation.
inline constexpr double kExpClamp = 700.0;

inline double clamp_exponent(double x) {
    if (x > kExpClamp) return kExpClamp;
    if (x < -kExpClamp) return -kExpClamp;
    return x;
}

/// log(1 + e^x) without overflow for large |x|.
inline double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

// Seeded random source. mt19937_64 output is pinned by the standard and the
// value-to-double mappings are spelled out here, so identical seeds give
// identical streams on every platform/stdlib.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Standard normal via Box-Muller, one cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Uniform index in [0, n). n must be positive.
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tem
