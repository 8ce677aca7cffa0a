#pragma once

#include <functional>
#include <stdexcept>

namespace fracbayes {

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Adaptive Gauss-Kronrod (7-15) integration of f on [a,b] to absolute
// tolerance abs_tol. Throws QuadratureError when the interval stack is
// exhausted before the error estimate converges.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10, int max_depth = 60);

// Integral of f over (0, infinity) via the substitution x = t/(1-t).
double integrate_positive_axis(const std::function<double(double)>& f,
                               double abs_tol = 1e-10);

}  // namespace fracbayes
