#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "readscale/corpus.hpp"

namespace readscale {

/// How zero counts are handled before taking logs.
enum class ZeroPolicy {
    Exclude,   // drop r = 0
    ShiftOne,  // use r + 1
};

ZeroPolicy parse_zero_policy(std::string_view name);
std::string_view to_string(ZeroPolicy policy) noexcept;

/// Maximum-likelihood lognormal fit. sigma2 uses divisor n_used.
///
/// The standard errors are observed-information values,
/// se(mu) = sigma / sqrt(n) and se(sigma2) = sigma2 * sqrt(2 / n).
struct LognormalFit {
    double mu = 0.0;
    double sigma2 = 0.0;
    double loglik = 0.0;
    std::size_t n_used = 0;
    std::size_t n_dropped = 0;
    double se_mu = 0.0;
    double se_sigma2 = 0.0;
};

LognormalFit fit_lognormal(std::span<const Count> reads, ZeroPolicy policy = ZeroPolicy::Exclude);

/// Real-valued variant, used for rescaled samples. Negative values are rejected.
LognormalFit fit_lognormal(std::span<const double> values,
                           ZeroPolicy policy = ZeroPolicy::Exclude);

/// Sum over values of log f(r; mu, sigma2) for the lognormal density.
/// Values must already be strictly positive (policy applied).
double lognormal_loglik(std::span<const double> values, double mu, double sigma2);

struct SwTestResult {
    double w = 1.0;
    double p = 1.0;
    std::size_t n = 0;
    bool reject = false;
};

/// Shapiro-Wilk W and p-value following Royston's AS R94 algorithm.
/// Requires 3 <= n <= 5000 and a non-constant sample; `reject` is left false.
SwTestResult shapiro_wilk(std::span<const double> values);

/// Bonferroni-corrected decision threshold alpha / m.
double bonferroni_threshold(double alpha, std::size_t m);

/// Shapiro-Wilk on the log of the policy-retained counts; reject when p < alpha / m.
SwTestResult test_lognormality(std::span<const Count> reads, ZeroPolicy policy, double alpha,
                               std::size_t m);
SwTestResult test_lognormality(std::span<const double> values, ZeroPolicy policy, double alpha,
                               std::size_t m);

/// Applies the corrected threshold to an already computed uncorrected result.
SwTestResult apply_bonferroni(SwTestResult result, double alpha, std::size_t m);

}  // namespace readscale
