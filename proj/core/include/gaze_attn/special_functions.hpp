#pragma once

namespace gaze_attn {

/// ln B(a, b).
double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1],
/// evaluated with a modified-Lentz continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) of Student's t with `df` > 0
/// degrees of freedom.
double student_t_two_sided_p(double t, double df);

}  // namespace gaze_attn
