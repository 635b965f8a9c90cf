#include "readscale/distfit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "readscale/error.hpp"
#include "readscale/normal.hpp"

namespace readscale {
namespace {

struct LogSample {
    std::vector<double> logs;
    std::size_t dropped = 0;
};

LogSample log_transform(std::span<const double> values, ZeroPolicy policy) {
    LogSample out;
    out.logs.reserve(values.size());
    for (double v : values) {
        if (!(v >= 0.0)) throw ParameterError(fmt::format("negative or NaN value {}", v));
        if (policy == ZeroPolicy::Exclude) {
            if (v == 0.0) {
                ++out.dropped;
                continue;
            }
            out.logs.push_back(std::log(v));
        } else {
            out.logs.push_back(std::log1p(v));
        }
    }
    return out;
}

std::vector<double> to_double(std::span<const Count> reads) {
    std::vector<double> out;
    out.reserve(reads.size());
    for (Count r : reads) {
        if (r < 0) throw ParameterError(fmt::format("negative count {}", r));
        out.push_back(static_cast<double>(r));
    }
    return out;
}

// Evaluates c[0] + c[1] x + ... + c[n-1] x^(n-1).
double poly(std::span<const double> c, double x) {
    double result = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) result = result * x + *it;
    return result;
}

}  // namespace

ZeroPolicy parse_zero_policy(std::string_view name) {
    if (name == "exclude") return ZeroPolicy::Exclude;
    if (name == "shift1" || name == "shift-one") return ZeroPolicy::ShiftOne;
    throw ParameterError(fmt::format("unknown zero policy '{}'", name));
}

std::string_view to_string(ZeroPolicy policy) noexcept {
    return policy == ZeroPolicy::Exclude ? "exclude" : "shift1";
}

double lognormal_loglik(std::span<const double> values, double mu, double sigma2) {
    const double sigma = std::sqrt(sigma2);
    const double log_norm = std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
    double ll = 0.0;
    for (double r : values) {
        const double lr = std::log(r);
        const double d = lr - mu;
        ll += -lr - log_norm - d * d / (2.0 * sigma2);
    }
    return ll;
}

LognormalFit fit_lognormal(std::span<const double> values, ZeroPolicy policy) {
    auto sample = log_transform(values, policy);
    const auto n = sample.logs.size();
    if (n == 0)
        throw DegenerateSampleError("no positive values left after applying the zero policy");
    if (n < 2)
        throw DegenerateSampleError("lognormal fit needs at least 2 positive values");

    if (std::all_of(sample.logs.begin(), sample.logs.end(),
                    [&](double l) { return l == sample.logs.front(); }))
        throw ZeroVarianceError("all log values are identical");

    double mean = 0.0;
    for (double l : sample.logs) mean += l;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double l : sample.logs) ss += (l - mean) * (l - mean);
    const double sigma2 = ss / static_cast<double>(n);
    if (!(sigma2 > 0.0)) throw ZeroVarianceError("log values have zero variance");

    LognormalFit fit;
    fit.mu = mean;
    fit.sigma2 = sigma2;
    fit.n_used = n;
    fit.n_dropped = sample.dropped;

    // Density in the transformed variable: r for exclude, r + 1 for shift-one.
    double sum_logs = 0.0;
    for (double l : sample.logs) sum_logs += l;
    const double dn = static_cast<double>(n);
    fit.loglik = -sum_logs - 0.5 * dn * std::log(2.0 * std::numbers::pi * sigma2) - ss / (2.0 * sigma2);

    fit.se_mu = std::sqrt(sigma2 / dn);
    fit.se_sigma2 = sigma2 * std::sqrt(2.0 / dn);
    return fit;
}

LognormalFit fit_lognormal(std::span<const Count> reads, ZeroPolicy policy) {
    const auto values = to_double(reads);
    return fit_lognormal(std::span<const double>(values), policy);
}

SwTestResult shapiro_wilk(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 3 || n > 5000)
        throw UnsupportedSizeError(
            fmt::format("Shapiro-Wilk needs 3 <= n <= 5000, got n = {}", n));

    std::vector<double> x(values.begin(), values.end());
    std::sort(x.begin(), x.end());
    const double range = x.back() - x.front();
    constexpr double small = 1e-19;
    if (!(range >= small) || x.front() == x.back())
        throw ZeroVarianceError("Shapiro-Wilk on a constant sample");

    static constexpr double g[] = {-2.273, 0.459};
    static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
    static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};

    const std::size_t half = n / 2;
    const double an = static_cast<double>(n);

    // Coefficients a[1..half] (1-based, a[0] unused) for the upper half of
    // the order statistics; the lower half is antisymmetric.
    std::vector<double> a(half + 1, 0.0);
    if (n == 3) {
        a[1] = std::sqrt(0.5);
    } else {
        const double an25 = an + 0.25;
        double summ2 = 0.0;
        for (std::size_t i = 1; i <= half; ++i) {
            a[i] = normal_quantile((static_cast<double>(i) - 0.375) / an25);
            summ2 += a[i] * a[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = poly(c1, rsn) - a[1] / ssumm2;

        std::size_t first_scaled;
        double fac;
        if (n > 5) {
            first_scaled = 3;
            const double a2 = -a[2] / ssumm2 + poly(c2, rsn);
            fac = std::sqrt((summ2 - 2.0 * (a[1] * a[1]) - 2.0 * (a[2] * a[2])) /
                            (1.0 - 2.0 * (a1 * a1) - 2.0 * (a2 * a2)));
            a[2] = a2;
        } else {
            first_scaled = 2;
            fac = std::sqrt((summ2 - 2.0 * (a[1] * a[1])) / (1.0 - 2.0 * (a1 * a1)));
        }
        a[1] = a1;
        for (std::size_t i = first_scaled; i <= half; ++i) a[i] /= -fac;
    }

    // Signed coefficient of the i-th order statistic (0-based).
    auto coef = [&](std::size_t i) {
        const std::size_t j = n - 1 - i;
        if (i == j) return 0.0;
        return i < j ? -a[1 + i] : a[1 + j];
    };

    // W as the squared correlation between the scaled data and the coefficients.
    double sa = 0.0;
    double sx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sa += coef(i);
        sx += x[i] / range;
    }
    sa /= an;
    sx /= an;
    double ssa = 0.0, ssx = 0.0, sax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double asa = coef(i) - sa;
        const double xsx = x[i] / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }

    // w1 = 1 - W, computed directly to keep precision when W is close to 1.
    const double ssassx = std::sqrt(ssa * ssx);
    const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);

    SwTestResult res;
    res.n = n;
    res.w = 1.0 - w1;

    if (n == 3) {
        constexpr double pi6 = 6.0 / std::numbers::pi;
        constexpr double stqr = std::numbers::pi / 3.0;  // asin(sqrt(3/4))
        res.p = std::max(0.0, pi6 * (std::asin(std::sqrt(res.w)) - stqr));
        res.p = std::min(res.p, 1.0);
        return res;
    }

    double y = std::log(w1);
    const double lxx = std::log(an);
    double m, s;
    if (n <= 11) {
        const double gamma = poly(g, an);
        if (y >= gamma) {
            res.p = 1e-99;
            return res;
        }
        y = -std::log(gamma - y);
        m = poly(c3, an);
        s = std::exp(poly(c4, an));
    } else {
        m = poly(c5, lxx);
        s = std::exp(poly(c6, lxx));
    }
    res.p = normal_sf((y - m) / s);
    return res;
}

double bonferroni_threshold(double alpha, std::size_t m) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ParameterError(fmt::format("alpha must lie in (0, 1), got {}", alpha));
    if (m < 1) throw ParameterError("hypothesis count m must be >= 1");
    return alpha / static_cast<double>(m);
}

SwTestResult apply_bonferroni(SwTestResult result, double alpha, std::size_t m) {
    result.reject = result.p < bonferroni_threshold(alpha, m);
    return result;
}

SwTestResult test_lognormality(std::span<const double> values, ZeroPolicy policy, double alpha,
                               std::size_t m) {
    bonferroni_threshold(alpha, m);
    auto sample = log_transform(values, policy);
    return apply_bonferroni(shapiro_wilk(sample.logs), alpha, m);
}

SwTestResult test_lognormality(std::span<const Count> reads, ZeroPolicy policy, double alpha,
                               std::size_t m) {
    const auto values = to_double(reads);
    return test_lognormality(std::span<const double>(values), policy, alpha, m);
}

}  // namespace readscale
