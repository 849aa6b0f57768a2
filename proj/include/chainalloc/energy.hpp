#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>

namespace chainalloc {

/// Energy quantity held as an integer count of microjoules (1e-3 mJ).
///
/// Scenario files carry millijoule figures with at most three decimals
/// (Table-style measurements such as 191.85 mJ), so this resolution makes
/// every per-interval cost and every battery budget exact, and lets the
/// exact solvers and the simulator do all arithmetic in integers.
class Energy {
public:
    constexpr Energy() = default;

    static constexpr Energy from_uj(std::int64_t uj) { return Energy(uj); }

    static Energy from_mj(double mj) { return Energy(std::llround(mj * 1000.0)); }

    constexpr std::int64_t uj() const { return uj_; }
    constexpr double mj() const { return static_cast<double>(uj_) / 1000.0; }

    constexpr Energy& operator+=(Energy o) {
        uj_ += o.uj_;
        return *this;
    }
    constexpr Energy& operator-=(Energy o) {
        uj_ -= o.uj_;
        return *this;
    }
    friend constexpr Energy operator+(Energy a, Energy b) { return Energy(a.uj_ + b.uj_); }
    friend constexpr Energy operator-(Energy a, Energy b) { return Energy(a.uj_ - b.uj_); }
    friend constexpr Energy operator*(Energy a, std::int64_t k) { return Energy(a.uj_ * k); }
    friend constexpr auto operator<=>(Energy, Energy) = default;

private:
    constexpr explicit Energy(std::int64_t uj) : uj_(uj) {}
    std::int64_t uj_ = 0;
};

/// Exact cost ratio (C_i + A_i) / E_i, i.e. the fraction of the remaining
/// battery spent per interval. The reciprocal is the device lifetime in
/// intervals. A zero denominator means the battery is empty, which compares
/// as an infinite ratio.
class CostRatio {
public:
    constexpr CostRatio() = default;
    constexpr CostRatio(Energy load, Energy budget)
        : num_(load.uj()), den_(budget.uj()) {
        if (den_ <= 0) {
            num_ = 1;
            den_ = 0;
        }
    }

    static constexpr CostRatio zero() { return CostRatio(); }
    static constexpr CostRatio infinite() {
        CostRatio r;
        r.num_ = 1;
        r.den_ = 0;
        return r;
    }

    constexpr std::int64_t numerator() const { return num_; }
    constexpr std::int64_t denominator() const { return den_; }
    constexpr bool is_infinite() const { return den_ == 0; }
    constexpr bool is_zero() const { return num_ == 0 && den_ != 0; }

    double value() const {
        if (is_infinite()) return std::numeric_limits<double>::infinity();
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    /// Lifetime in intervals, +inf for zero drain, 0 for an empty battery.
    double lifetime() const {
        if (is_infinite()) return 0.0;
        if (num_ == 0) return std::numeric_limits<double>::infinity();
        return static_cast<double>(den_) / static_cast<double>(num_);
    }

    friend constexpr std::strong_ordering operator<=>(const CostRatio& a, const CostRatio& b) {
        if (a.is_infinite() || b.is_infinite()) {
            return a.is_infinite() <=> b.is_infinite();
        }
        const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
        const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
        if (lhs < rhs) return std::strong_ordering::less;
        if (lhs > rhs) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }
    friend constexpr bool operator==(const CostRatio& a, const CostRatio& b) {
        return (a <=> b) == 0;
    }

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace chainalloc
