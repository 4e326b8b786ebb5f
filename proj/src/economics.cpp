#include "tdm/economics.hpp"

#include <sstream>

namespace tdm::econ {

using boost::multiprecision::cpp_int;

Rational rational_from_money(Money m) { return Rational(m.micro(), kMicro); }
Rational rational_from_tokens(Tokens t) {
    return Rational(cpp_int(t.micro()), cpp_int(kMicro));
}

Rational parse_rational(const std::string& text) {
    if (text.empty())
        throw DomainError(DomainError::Code::ConfigInvalid, "empty numeric literal");
    size_t pos = 0;
    bool neg = false;
    if (text[pos] == '-' || text[pos] == '+') {
        neg = text[pos] == '-';
        ++pos;
    }
    cpp_int num = 0;
    cpp_int den = 1;
    bool any = false, dot = false;
    for (; pos < text.size(); ++pos) {
        char c = text[pos];
        if (c == '.') {
            if (dot)
                throw DomainError(DomainError::Code::ConfigInvalid, "bad numeric: " + text);
            dot = true;
        } else if (c >= '0' && c <= '9') {
            num = num * 10 + (c - '0');
            if (dot) den *= 10;
            any = true;
        } else {
            throw DomainError(DomainError::Code::ConfigInvalid, "bad numeric: " + text);
        }
    }
    if (!any)
        throw DomainError(DomainError::Code::ConfigInvalid, "bad numeric: " + text);
    Rational r(num, den);
    return neg ? -r : r;
}

Money to_money(const Rational& r) {
    Rational scaled = r * kMicro;
    cpp_int num = numerator(scaled);
    cpp_int den = denominator(scaled); // positive by canonical form
    bool neg = num < 0;
    if (neg) num = -num;
    cpp_int q = num / den;
    cpp_int rem = num % den;
    if (rem * 2 >= den) q += 1; // ties away from zero
    int64_t micro = q.convert_to<int64_t>();
    return Money::from_micro(neg ? -micro : micro);
}

std::string render(const Rational& r, int max_digits) {
    cpp_int num = numerator(r);
    cpp_int den = denominator(r);
    bool neg = num < 0;
    if (neg) num = -num;
    cpp_int whole = num / den;
    cpp_int rem = num % den;
    std::ostringstream out;
    if (neg && (whole != 0 || rem != 0)) out << '-';
    out << whole;
    if (rem == 0) return out.str();
    std::string frac;
    for (int i = 0; i < max_digits && rem != 0; ++i) {
        rem *= 10;
        cpp_int digit = rem / den;
        frac.push_back(static_cast<char>('0' + digit.convert_to<int>()));
        rem %= den;
    }
    if (rem != 0 && rem * 2 >= den) {
        // round the last digit, propagating carries
        int i = static_cast<int>(frac.size()) - 1;
        while (i >= 0) {
            if (frac[i] == '9') {
                frac[i] = '0';
                --i;
            } else {
                frac[i] += 1;
                break;
            }
        }
        if (i < 0) {
            whole += 1;
            std::ostringstream redo;
            if (neg) redo << '-';
            redo << whole;
            out.str(redo.str());
        }
    }
    while (!frac.empty() && frac.back() == '0') frac.pop_back();
    std::string result = out.str();
    if (!frac.empty()) result += "." + frac;
    return result;
}

Rational liveness_budget(const Rational& k, const Rational& D, const Rational& c,
                         const Rational& N) {
    if (c == 0 || N == 0)
        throw DomainError(DomainError::Code::DivisionByZero, "liveness budget needs c>0, N>0");
    return k * D / (c * N);
}

Rational honest_ev(const Rational& alpha, const Rational& k, const Rational& D) {
    return alpha * k * D;
}

Rational dishonest_ev(const Rational& p_detect, const Rational& beta, const Rational& gamma,
                      const Rational& alpha, const Rational& k, const Rational& ell,
                      const Rational& D) {
    return -p_detect * D + (1 - p_detect) * (beta * alpha * k + gamma * ell) * D;
}

std::optional<Rational> dishonest_alpha_threshold(const Rational& p_detect, const Rational& beta,
                                                  const Rational& gamma, const Rational& k,
                                                  const Rational& ell) {
    Rational den = (1 - p_detect) * beta * k;
    if (den == 0) return std::nullopt;
    // Exact zero of the dishonest EV in alpha. (Solving
    // -p + (1-p)(b*a*k + g*l) < 0 for a puts the g*l term on the other
    // side with a minus sign.)
    return (p_detect - (1 - p_detect) * gamma * ell) / den;
}

Rational contribution_ev(const Rational& alpha, const Rational& k, const Rational& D,
                         const Rational& E_cost) {
    return alpha * k * D - E_cost;
}

Rational min_data_price(const Rational& E_cost, const Rational& supply, const Rational& k,
                        const Rational& reward) {
    if (k == 0 || reward == 0)
        throw DomainError(DomainError::Code::DivisionByZero, "min price needs k>0, reward>0");
    return E_cost * supply / (k * reward);
}

Rational token_unit_value(const Rational& R_total, const Rational& supply) {
    if (supply == 0)
        throw DomainError(DomainError::Code::DivisionByZero, "unit value needs supply>0");
    return R_total / supply;
}

} // namespace tdm::econ
