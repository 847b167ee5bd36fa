#pragma once
// Standard normal helpers.

namespace ssdlasso {

double normal_cdf(double x) noexcept;
double normal_pdf(double x) noexcept;
// Inverse cdf (Wichura's AS241, about 1e-16 relative accuracy). p must lie in [0,1].
double normal_quantile(double p);
// pdf(x)/cdf(x), stable far into the left tail where both underflow.
double inverse_mills(double x) noexcept;

}  // namespace ssdlasso
