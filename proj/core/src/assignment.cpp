#include "neyman/assignment.hpp"

#include "neyman/errors.hpp"

#include <algorithm>
#include <numeric>

namespace neyman {

AssignmentVector::AssignmentVector(int n, std::uint64_t bits) : n_(n), bits_(bits) {
    if (n < 1 || n > kMaxUnits)
        throw ValidationError("assignment length must be in [1, 64], got " + std::to_string(n));
    if ((bits & ~mask(n)) != 0) throw ValidationError("assignment bits exceed length");
}

AssignmentVector AssignmentVector::from_string(std::string_view s) {
    int n = static_cast<int>(s.size());
    if (n < 1 || n > kMaxUnits)
        throw ValidationError("assignment string length must be in [1, 64]: '" + std::string(s) + "'");
    std::uint64_t bits = 0;
    for (char ch : s) {
        if (ch != '0' && ch != '1')
            throw ValidationError("assignment string must contain only 0/1: '" + std::string(s) + "'");
        bits = (bits << 1) | static_cast<std::uint64_t>(ch == '1');
    }
    return {n, bits};
}

AssignmentVector AssignmentVector::from_indicators(const std::vector<int>& w) {
    int n = static_cast<int>(w.size());
    if (n < 1 || n > kMaxUnits) throw ValidationError("assignment length must be in [1, 64]");
    std::uint64_t bits = 0;
    for (int v : w) {
        if (v != 0 && v != 1) throw ValidationError("treatment indicators must be 0 or 1");
        bits = (bits << 1) | static_cast<std::uint64_t>(v);
    }
    return {n, bits};
}

AssignmentVector AssignmentVector::with(int i, bool value) const {
    std::uint64_t b = unit_bit(n_, i);
    return {n_, value ? (bits_ | b) : (bits_ & ~b)};
}

std::string AssignmentVector::to_string() const {
    std::string s(static_cast<std::size_t>(n_), '0');
    for (int i = 0; i < n_; ++i)
        if (treated(i)) s[static_cast<std::size_t>(i)] = '1';
    return s;
}

std::vector<int> AssignmentVector::indicators() const {
    std::vector<int> out(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = (*this)[i];
    return out;
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        // r * (n-k+i) is divisible by i; split i between the factors to stay in 64 bits.
        auto g = std::gcd(r, static_cast<std::uint64_t>(i));
        std::uint64_t t = static_cast<std::uint64_t>(n - k + i) / (static_cast<std::uint64_t>(i) / g);
        r /= g;
        if (r > ~0ULL / t) return ~0ULL;
        r *= t;
    }
    return r;
}

void for_each_combination(int n, int k, const std::function<void(std::uint64_t)>& f) {
    if (k < 0 || k > n) return;
    if (k == 0) {
        f(0);
        return;
    }
    std::uint64_t x = AssignmentVector::mask(k);
    std::uint64_t last = x << (n - k);
    while (true) {
        f(x);
        if (x == last) break;
        x = next_combination(x);
    }
}

}  // namespace neyman
