#pragma once

namespace readscale {

/// Standard normal CDF.
double normal_cdf(double x) noexcept;

/// Upper tail 1 - Phi(x), accurate for large x.
double normal_sf(double x) noexcept;

/// Inverse standard normal CDF (Wichura's AS 241, PPND16; ~1e-16 relative).
/// Returns -inf / +inf at p = 0 / 1 and NaN outside [0, 1].
double normal_quantile(double p) noexcept;

}  // namespace readscale
