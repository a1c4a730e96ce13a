#include "conceptscope/special_functions.hpp"

#include <cmath>
#include <limits>

#include "conceptscope/error.hpp"

namespace conceptscope {

namespace {

// Continued fraction for I_x(a,b) (Numerical Recipes betacf form).
double beta_continued_fraction(double x, double a, double b) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 100000;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  throw Error(ErrorKind::invalid_input, "incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double x, double one_minus_x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::invalid_input, "incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorKind::invalid_input, "incomplete beta needs x in [0,1]");
  if (x == 0.0) return 0.0;
  if (one_minus_x == 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log(one_minus_x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(one_minus_x, b, a) / b;
}

double regularized_incomplete_beta(double x, double a, double b) {
  return regularized_incomplete_beta(x, 1.0 - x, a, b);
}

double students_t_two_tailed_p(double t, double dof) {
  if (!(dof > 0.0)) throw Error(ErrorKind::invalid_input, "t distribution needs dof > 0");
  if (std::isnan(t)) throw Error(ErrorKind::invalid_input, "t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  const double denom = dof + t2;
  // P(|T| >= |t|) = I_{dof/(dof+t^2)}(dof/2, 1/2)
  return regularized_incomplete_beta(dof / denom, t2 / denom, 0.5 * dof, 0.5);
}

double students_t_cdf(double t, double dof) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * students_t_two_tailed_p(t, dof);
  return t >= 0.0 ? 1.0 - tail : tail;
}

}  // namespace conceptscope
