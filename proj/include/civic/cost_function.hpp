#pragma once

namespace civic {

// Two-outcome LMSR cost with one leg held fixed:
//   C0(q) = b * ln(exp(q_fix / b) + exp(q / b))
// Strictly increasing and strictly convex in q, with the closed-form inverse
//   C0^-1(c) = b * ln(exp(c / b) - exp(q_fix / b)),  defined for c > q_fix.
struct CostFunction {
  double liquidity = 1.0;
  double fixed_leg = 0.0;
};

void validate(const CostFunction& cf);

double cost(const CostFunction& cf, double q);

double inverse_cost(const CostFunction& cf, double c);

// Securities issued for paying x when q securities are already outstanding:
//   r = C0^-1(x + C0(q)) - q
double securities_for(const CostFunction& cf, double x, double q);

// Payment that buys r securities on top of q outstanding: C0(r + q) - C0(q).
double contribution_for(const CostFunction& cf, double r, double q);

// Outstanding securities after a cumulative payment of `raised` into a market
// that started empty. Issuance is path independent: C0(q) = raised + C0(0).
double issued_after(const CostFunction& cf, double raised);

}  // namespace civic
