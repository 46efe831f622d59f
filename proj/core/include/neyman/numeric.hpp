#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>

namespace neyman {

struct Tolerances {
    double probability = 1e-12;
    double weight = 1e-9;
    double estimator = 1e-10;
};

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) {
        add(x);
        return *this;
    }
    CompensatedSum& operator+=(const CompensatedSum& o) {
        add(o.sum_);
        add(o.comp_);
        return *this;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

// |a-b| scaled by max(|a|,|b|), with a floor so that two values near zero compare absolutely.
inline double relative_residual(double a, double b, double floor = 1e-12) {
    double scale = std::max({std::abs(a), std::abs(b), floor});
    return std::abs(a - b) / scale;
}

// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace neyman
