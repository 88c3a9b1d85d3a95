#pragma once

namespace vbmi {

// Digamma via recurrence up to x >= 6 followed by the asymptotic series.
// Defined for x > 0 only; returns NaN otherwise.
double digamma(double x);

double logit(double p);
double inv_logit(double x);

// log of the Beta(a, b) density at x in (0, 1), computed with lgamma.
double log_beta_pdf(double x, double a, double b);

// Two-sided critical value t_{df, 1 - alpha/2}; df = +inf gives the normal quantile.
double t_critical(double df, double level);

}  // namespace vbmi
