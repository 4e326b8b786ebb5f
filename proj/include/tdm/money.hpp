#ifndef TDM_MONEY_HPP
#define TDM_MONEY_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tdm {

using Tick = int64_t;
inline constexpr Tick kTickNever = INT64_MAX;

// One display unit = 10^6 micro units, for both money and tokens.
inline constexpr int64_t kMicro = 1'000'000;

class DomainError : public std::runtime_error {
public:
    enum class Code {
        IssuanceForbidden,
        BondNotActive,
        BondStillLocked,
        InsufficientTokens,
        EmptyEconomy,
        InvalidParams,
        OffchainDisabled,
        DuplicateContent,
        PollClosed,
        PollStillOpen,
        PollAlreadyResolved,
        AlreadyVoted,
        NotTokenHolder,
        ElementNotLive,
        NotOffchainLeaf,
        NotAMember,
        NoEconomy,
        WrongPrice,
        DataUnavailable,
        InvalidPartition,
        ClockRegression,
        EmptyPayload,
        DivisionByZero,
        UnknownElement,
        UnknownPoll,
        NegativeAmount,
        ConfigInvalid,
    };
    DomainError(Code code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

// Monetary value with 6 fractional digits, exact integer arithmetic on
// micro units. Signed so economics deltas can go negative; ledger paths
// enforce non-negativity at their boundaries.
class Money {
public:
    constexpr Money() = default;
    static constexpr Money from_micro(int64_t micro) { return Money(micro); }
    static constexpr Money from_units(int64_t units) { return Money(units * kMicro); }
    static Money parse(const std::string& text);

    constexpr int64_t micro() const { return micro_; }
    double to_double() const { return static_cast<double>(micro_) / kMicro; }
    std::string str() const;

    constexpr Money operator+(Money o) const { return Money(micro_ + o.micro_); }
    constexpr Money operator-(Money o) const { return Money(micro_ - o.micro_); }
    constexpr Money operator-() const { return Money(-micro_); }
    Money& operator+=(Money o) { micro_ += o.micro_; return *this; }
    Money& operator-=(Money o) { micro_ -= o.micro_; return *this; }
    constexpr auto operator<=>(const Money&) const = default;

private:
    explicit constexpr Money(int64_t micro) : micro_(micro) {}
    int64_t micro_ = 0;
};

// Indivisible micro-token count. Never negative.
class Tokens {
public:
    constexpr Tokens() = default;
    static constexpr Tokens from_micro(uint64_t micro) { return Tokens(micro); }
    static constexpr Tokens from_display(uint64_t display) { return Tokens(display * kMicro); }
    static Tokens parse(const std::string& text);

    constexpr uint64_t micro() const { return micro_; }
    constexpr bool is_zero() const { return micro_ == 0; }
    std::string str() const;

    constexpr Tokens operator+(Tokens o) const { return Tokens(micro_ + o.micro_); }
    Tokens operator-(Tokens o) const {
        if (o.micro_ > micro_)
            throw DomainError(DomainError::Code::NegativeAmount, "token amount underflow");
        return Tokens(micro_ - o.micro_);
    }
    Tokens& operator+=(Tokens o) { micro_ += o.micro_; return *this; }
    Tokens& operator-=(Tokens o) { *this = *this - o; return *this; }
    constexpr auto operator<=>(const Tokens&) const = default;

private:
    explicit constexpr Tokens(uint64_t micro) : micro_(micro) {}
    uint64_t micro_ = 0;
};

// Fractions (quorums, thresholds) as basis points of 10^-4: 66.67% -> 6667.
using BasisPoints = int32_t;
inline constexpr BasisPoints kBpOne = 10'000;

// Parses a decimal fraction string ("0.6667") to basis points exactly;
// rejects values needing more than 4 fractional digits.
BasisPoints parse_basis_points(const std::string& text);
std::string basis_points_str(BasisPoints bp);

// yes_weight / supply >= quorum, decided in integer arithmetic.
inline bool quorum_met(Tokens yes_weight, Tokens supply, BasisPoints quorum_bp) {
    return static_cast<unsigned __int128>(yes_weight.micro()) * kBpOne >=
           static_cast<unsigned __int128>(quorum_bp) * supply.micro();
}

// Fixed-point string with exactly 6 fractional digits (canonical form).
std::string fixed6_str(int64_t micro);
int64_t parse_fixed6(const std::string& text);

} // namespace tdm

#endif
