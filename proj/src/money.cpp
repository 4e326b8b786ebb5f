#include "tdm/money.hpp"

#include <cctype>
#include <cstdlib>

namespace tdm {

std::string fixed6_str(int64_t micro) {
    bool neg = micro < 0;
    uint64_t mag = neg ? static_cast<uint64_t>(-(micro + 1)) + 1 : static_cast<uint64_t>(micro);
    uint64_t whole = mag / kMicro;
    uint64_t frac = mag % kMicro;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%llu.%06llu", neg ? "-" : "",
                  static_cast<unsigned long long>(whole),
                  static_cast<unsigned long long>(frac));
    return buf;
}

int64_t parse_fixed6(const std::string& text) {
    if (text.empty())
        throw DomainError(DomainError::Code::ConfigInvalid, "empty fixed-point literal");
    size_t pos = 0;
    bool neg = false;
    if (text[pos] == '-' || text[pos] == '+') {
        neg = text[pos] == '-';
        ++pos;
    }
    int64_t whole = 0;
    bool any_digit = false;
    for (; pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])); ++pos) {
        whole = whole * 10 + (text[pos] - '0');
        any_digit = true;
    }
    int64_t frac = 0;
    int frac_digits = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        for (; pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])); ++pos) {
            if (frac_digits < 6) {
                frac = frac * 10 + (text[pos] - '0');
                ++frac_digits;
            } else if (text[pos] != '0') {
                throw DomainError(DomainError::Code::ConfigInvalid,
                                  "more than 6 fractional digits: " + text);
            }
            any_digit = true;
        }
    }
    if (!any_digit || pos != text.size())
        throw DomainError(DomainError::Code::ConfigInvalid, "bad fixed-point literal: " + text);
    while (frac_digits < 6) {
        frac *= 10;
        ++frac_digits;
    }
    int64_t micro = whole * kMicro + frac;
    return neg ? -micro : micro;
}

Money Money::parse(const std::string& text) { return Money::from_micro(parse_fixed6(text)); }

std::string Money::str() const { return fixed6_str(micro_); }

Tokens Tokens::parse(const std::string& text) {
    int64_t micro = parse_fixed6(text);
    if (micro < 0)
        throw DomainError(DomainError::Code::NegativeAmount, "negative token amount: " + text);
    return Tokens::from_micro(static_cast<uint64_t>(micro));
}

std::string Tokens::str() const { return fixed6_str(static_cast<int64_t>(micro_)); }

BasisPoints parse_basis_points(const std::string& text) {
    int64_t micro = parse_fixed6(text);
    if (micro < 0 || micro % 100 != 0)
        throw DomainError(DomainError::Code::InvalidParams,
                          "fraction not representable in basis points: " + text);
    return static_cast<BasisPoints>(micro / 100);
}

std::string basis_points_str(BasisPoints bp) {
    return fixed6_str(static_cast<int64_t>(bp) * 100);
}

} // namespace tdm
