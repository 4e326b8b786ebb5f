#ifndef TDM_ECONOMICS_HPP
#define TDM_ECONOMICS_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>

#include "tdm/money.hpp"

namespace tdm::econ {

// Closed-form incentive calculators. Everything is exact rational
// arithmetic internally; fixed-point rendering happens only at the
// boundary.
using Rational = boost::multiprecision::cpp_rational;

Rational rational_from_money(Money m);
Rational rational_from_tokens(Tokens t);
// Parses a plain decimal ("0.6667", "-12.5") to an exact rational.
Rational parse_rational(const std::string& text);
// Nearest fixed-point value, ties away from zero.
Money to_money(const Rational& r);
// Decimal rendering: integral values print without a fractional part,
// otherwise up to `max_digits` digits (trailing zeros trimmed, rounded).
std::string render(const Rational& r, int max_digits = 6);

// Incentivized liveness checks per element: k*D / (c*N).
Rational liveness_budget(const Rational& k, const Rational& D, const Rational& c,
                         const Rational& N);

// Expected value of honest membership: alpha*k*D.
Rational honest_ev(const Rational& alpha, const Rational& k, const Rational& D);

// Expected value of a leak:
//   -p_detect*D + (1-p_detect)*(beta*alpha*k + gamma*ell)*D.
Rational dishonest_ev(const Rational& p_detect, const Rational& beta, const Rational& gamma,
                      const Rational& alpha, const Rational& k, const Rational& ell,
                      const Rational& D);

// Ownership-fraction bound below which leaking has negative EV:
//   (p_detect - (1-p_detect)*gamma*ell) / ((1-p_detect)*beta*k),
// the exact zero of dishonest_ev in alpha (may be negative: dishonesty
// then profits at any ownership level). nullopt when the denominator
// vanishes (dishonesty never profits via the beta*alpha*k term; any
// alpha is safe).
std::optional<Rational> dishonest_alpha_threshold(const Rational& p_detect, const Rational& beta,
                                                  const Rational& gamma, const Rational& k,
                                                  const Rational& ell);

// Expected return for contributing an element: alpha*k*D - E.
Rational contribution_ev(const Rational& alpha, const Rational& k, const Rational& D,
                         const Rational& E_cost);

// Minimum dataset price with positive contribution EV:
//   E * supply / (k * reward).
Rational min_data_price(const Rational& E_cost, const Rational& supply, const Rational& k,
                        const Rational& reward);

// Unit token value: R / supply.
Rational token_unit_value(const Rational& R_total, const Rational& supply);

} // namespace tdm::econ

#endif
