#pragma once

namespace conceptscope {

/// I_x(a, b), evaluated with the modified Lentz continued fraction on
/// whichever of I_x(a,b) / 1 - I_{1-x}(b,a) converges faster. Relative
/// accuracy is around 1e-14 for the shapes the t-test uses.
double regularized_incomplete_beta(double x, double a, double b);

/// Same, but takes 1 - x explicitly to avoid cancellation when x is near 1.
double regularized_incomplete_beta(double x, double one_minus_x, double a, double b);

/// Student's t cumulative distribution with `dof` degrees of freedom.
double students_t_cdf(double t, double dof);

/// P(|T| >= |t|).
double students_t_two_tailed_p(double t, double dof);

}  // namespace conceptscope
