#pragma once

namespace ice {

double digamma(double x);

// log Gamma_d(a), the multivariate gamma function.
double log_multivariate_gamma(double a, int d);

// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

// Regularized incomplete beta I_x(a, b).
double regularized_beta(double x, double a, double b);

double chi_squared_cdf(double x, double dof);
double chi_squared_quantile(double p, double dof);

double f_cdf(double x, double dof1, double dof2);
double f_quantile(double p, double dof1, double dof2);

}  // namespace ice
