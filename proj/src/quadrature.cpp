#include "fracbayes/quadrature.hpp"

#include <cmath>

namespace fracbayes {

namespace {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK constants).
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

struct RuleResult {
  double value;
  double error;
};

RuleResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double gauss = fc * kWg[3];
  double kron = fc * kWgk[7];
  for (int i = 0; i < 7; ++i) {
    const double x = h * kXgk[i];
    const double fsum = f(c - x) + f(c + x);
    kron += fsum * kWgk[i];
    if (i % 2 == 1) gauss += fsum * kWg[i / 2];
  }
  const double value = kron * h;
  const double error = std::fabs((kron - gauss) * h);
  return {value, error};
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double tol, int depth, int max_depth) {
  const RuleResult r = gk15(f, a, b);
  if (r.error <= tol || r.error <= 1e-16 * std::fabs(r.value)) return r.value;
  if (depth >= max_depth)
    throw QuadratureError("quadrature failed to converge on an interval");
  const double m = 0.5 * (a + b);
  return adapt(f, a, m, 0.5 * tol, depth + 1, max_depth) +
         adapt(f, m, b, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_depth) {
  if (!(a < b)) return 0.0;
  return adapt(f, a, b, abs_tol, 0, max_depth);
}

double integrate_positive_axis(const std::function<double(double)>& f,
                               double abs_tol) {
  auto g = [&f](double t) {
    const double onemt = 1.0 - t;
    const double x = t / onemt;
    return f(x) / (onemt * onemt);
  };
  return integrate(g, 0.0, 1.0 - 1e-12, abs_tol);
}

}  // namespace fracbayes
