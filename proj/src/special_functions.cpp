#include "ice/special_functions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ice {

namespace {

constexpr int kMaxIterations = 500;
constexpr double kEpsilon = 1e-16;

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < kMaxIterations; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEpsilon) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) = 1 - P(a, x), valid for x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
  const double tiny = std::numeric_limits<double>::min() / kEpsilon;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEpsilon) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for the incomplete beta function.
double beta_continued_fraction(double x, double a, double b) {
  const double tiny = std::numeric_limits<double>::min() / kEpsilon;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEpsilon) break;
  }
  return h;
}

// Bisection on a monotone CDF. The bracket is grown until it contains p.
template <typename Cdf>
double invert_cdf(const Cdf& cdf, double p, double initial_upper) {
  double lo = 0.0;
  double hi = initial_upper;
  for (int i = 0; i < 200 && cdf(hi) < p; ++i) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double digamma(double x) {
  if (x <= 0.0 && x == std::floor(x))
    throw std::invalid_argument("digamma: nonpositive integer argument");
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
  return result;
}

double log_multivariate_gamma(double a, int d) {
  if (d < 1) throw std::invalid_argument("log_multivariate_gamma: dimension must be positive");
  double result = 0.25 * d * (d - 1) * std::log(M_PI);
  for (int j = 1; j <= d; ++j) result += std::lgamma(a + 0.5 * (1 - j));
  return result;
}

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("regularized_gamma_p: shape must be positive");
  if (x < 0.0) throw std::invalid_argument("regularized_gamma_p: negative argument");
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_continued_fraction(a, x);
}

double regularized_beta(double x, double a, double b) {
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("regularized_beta: shapes must be positive");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("regularized_beta: argument outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double chi_squared_cdf(double x, double dof) {
  if (dof <= 0.0) throw std::invalid_argument("chi_squared_cdf: dof must be positive");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi_squared_quantile(double p, double dof) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("chi_squared_quantile: p outside [0, 1)");
  if (p == 0.0) return 0.0;
  return invert_cdf([dof](double x) { return chi_squared_cdf(x, dof); }, p,
                    dof + 10.0 * std::sqrt(dof));
}

double f_cdf(double x, double dof1, double dof2) {
  if (dof1 <= 0.0 || dof2 <= 0.0) throw std::invalid_argument("f_cdf: dof must be positive");
  if (x <= 0.0) return 0.0;
  return regularized_beta(dof1 * x / (dof1 * x + dof2), 0.5 * dof1, 0.5 * dof2);
}

double f_quantile(double p, double dof1, double dof2) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("f_quantile: p outside [0, 1)");
  if (p == 0.0) return 0.0;
  return invert_cdf([dof1, dof2](double x) { return f_cdf(x, dof1, dof2); }, p, 4.0);
}

}  // namespace ice
