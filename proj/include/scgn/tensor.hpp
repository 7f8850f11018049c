#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace scgn {

/// Dense row-major tensor of doubles. Images are (height, width, channels);
/// conv weights are (k, k, in_channels, out_channels); fc weights are
/// (in_features, out_features); biases are (channels).
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(numel_of(shape), 0.0) {}

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int> s, double value) {
        Tensor t(std::move(s));
        std::fill(t.v.begin(), t.v.end(), value);
        return t;
    }

    static std::int64_t numel_of(const std::vector<int>& s) {
        std::int64_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("tensor dimension must be positive");
            n *= d;
        }
        return n;
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    int h() const { return shape.at(0); }
    int w() const { return shape.at(1); }
    int c() const { return shape.at(2); }

    double& at(int y, int x, int ch) { return v[(static_cast<std::int64_t>(y) * shape[1] + x) * shape[2] + ch]; }
    double at(int y, int x, int ch) const { return v[(static_cast<std::int64_t>(y) * shape[1] + x) * shape[2] + ch]; }

    Tensor& operator+=(const Tensor& o) {
        if (!same_shape(o)) throw std::invalid_argument("tensor shape mismatch in +=");
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
        return *this;
    }
    Tensor& scale(double a) {
        for (double& x : v) x *= a;
        return *this;
    }
};

std::string shape_str(const std::vector<int>& s);

/// Deterministic generator. Uniform draws come straight off mt19937_64 (bit-exact
/// across platforms per the standard); normal draws use Box–Muller on those bits
/// rather than std::normal_distribution, whose output is implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Inclusive integer range.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double normal() {
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Normal(0, stddev) resampled until within ±2 stddev.
    double truncated_normal(double stddev) {
        double z = 0.0;
        do { z = normal(); } while (std::abs(z) > 2.0);
        return z * stddev;
    }

    std::string state() const;
    void set_state(const std::string& s);

  private:
    std::mt19937_64 eng_;
};

}  // namespace scgn
