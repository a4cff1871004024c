#include "civic/cost_function.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "civic/error.hpp"

namespace civic {

namespace {

// ln(e^a + e^b), shifted by the max so large quantities do not overflow.
double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// ln(e^a - e^b) for a > b.
double log_diff_exp(double a, double b) {
  return a + std::log1p(-std::exp(b - a));
}

}  // namespace

void validate(const CostFunction& cf) {
  require(std::isfinite(cf.liquidity) && cf.liquidity > 0.0,
          "cost.liquidity must be > 0");
  require(std::isfinite(cf.fixed_leg), "cost.fixed_leg must be finite");
}

double cost(const CostFunction& cf, double q) {
  require(q >= 0.0, "cost: quantity must be >= 0, got " + std::to_string(q));
  const double b = cf.liquidity;
  return b * log_sum_exp(cf.fixed_leg / b, q / b);
}

double inverse_cost(const CostFunction& cf, double c) {
  const double b = cf.liquidity;
  if (!(c > cf.fixed_leg)) {
    fail(ErrorKind::InvalidInput,
         "inverse_cost: amount " + std::to_string(c) +
             " is outside the cost range (must exceed " +
             std::to_string(cf.fixed_leg) + ")");
  }
  return b * log_diff_exp(c / b, cf.fixed_leg / b);
}

double securities_for(const CostFunction& cf, double x, double q) {
  require(x >= 0.0, "securities_for: contribution must be >= 0");
  require(q >= 0.0, "securities_for: issued quantity must be >= 0");
  if (x == 0.0) return 0.0;
  return std::max(0.0, inverse_cost(cf, x + cost(cf, q)) - q);
}

double contribution_for(const CostFunction& cf, double r, double q) {
  require(r >= 0.0, "contribution_for: securities must be >= 0");
  require(q >= 0.0, "contribution_for: issued quantity must be >= 0");
  if (r == 0.0) return 0.0;
  return cost(cf, r + q) - cost(cf, q);
}

double issued_after(const CostFunction& cf, double raised) {
  require(raised >= 0.0, "issued_after: raised amount must be >= 0");
  if (raised == 0.0) return 0.0;
  return std::max(0.0, inverse_cost(cf, raised + cost(cf, 0.0)));
}

}  // namespace civic
