#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace neyman {

inline constexpr int kMaxUnits = 64;

// Treatment allocation over N <= 64 units, packed so that unit 0 is the most
// significant bit. Numeric order of bits() is then lexicographic order of the
// bit-string with unit 1 leftmost.
class AssignmentVector {
public:
    AssignmentVector() = default;
    AssignmentVector(int n, std::uint64_t bits);

    static AssignmentVector from_string(std::string_view s);
    static AssignmentVector from_indicators(const std::vector<int>& w);

    int size() const { return n_; }
    std::uint64_t bits() const { return bits_; }

    bool treated(int i) const { return (bits_ >> (n_ - 1 - i)) & 1U; }
    int operator[](int i) const { return treated(i) ? 1 : 0; }

    int n_treated() const { return std::popcount(bits_); }
    int n_control() const { return n_ - n_treated(); }

    AssignmentVector complement() const { return {n_, ~bits_ & mask(n_)}; }
    AssignmentVector with(int i, bool value) const;

    std::string to_string() const;
    std::vector<int> indicators() const;

    static std::uint64_t mask(int n) { return n == 64 ? ~0ULL : ((1ULL << n) - 1); }
    static std::uint64_t unit_bit(int n, int i) { return 1ULL << (n - 1 - i); }

    friend bool operator==(const AssignmentVector&, const AssignmentVector&) = default;
    friend std::strong_ordering operator<=>(const AssignmentVector& a, const AssignmentVector& b) {
        if (auto c = a.n_ <=> b.n_; c != 0) return c;
        return a.bits_ <=> b.bits_;
    }

private:
    int n_ = 0;
    std::uint64_t bits_ = 0;
};

// C(n, k) as an exact integer; saturates at UINT64_MAX on overflow.
std::uint64_t binomial(int n, int k);

// Next larger integer with the same popcount (Gosper).
inline std::uint64_t next_combination(std::uint64_t x) {
    std::uint64_t c = x & (~x + 1);
    std::uint64_t r = x + c;
    return (((r ^ x) >> 2) / c) | r;
}

// Calls f(bits) for every k-subset of n bit positions in increasing numeric order.
void for_each_combination(int n, int k, const std::function<void(std::uint64_t)>& f);

}  // namespace neyman

template <>
struct std::hash<neyman::AssignmentVector> {
    std::size_t operator()(const neyman::AssignmentVector& w) const noexcept {
        return std::hash<std::uint64_t>{}(w.bits() * 0x9e3779b97f4a7c15ULL + w.size());
    }
};
