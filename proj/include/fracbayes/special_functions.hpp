#pragma once

namespace fracbayes {

// Regularized lower incomplete gamma P(a,x) and its complement Q(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Standard normal CDF.
double normal_cdf(double x);

// CDF of the inverse-gamma distribution IG(shape a, rate b) at x > 0.
double inv_gamma_cdf(double a, double b, double x);

// CDF of Student's t with 3 degrees of freedom (closed form).
double student_t3_cdf(double x);

}  // namespace fracbayes
