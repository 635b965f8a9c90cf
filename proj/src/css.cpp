#include "readscale/css.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "readscale/error.hpp"

namespace readscale {
namespace {

std::vector<double> widen(std::span<const Count> reads) {
    return {reads.begin(), reads.end()};
}

}  // namespace

TruncationRule parse_truncation_rule(std::string_view name) {
    if (name == "ge") return TruncationRule::AtLeast;
    if (name == "gt") return TruncationRule::Above;
    throw ParameterError(fmt::format("unknown truncation rule '{}' (expected ge or gt)", name));
}

std::vector<double> characteristic_scores(std::span<const double> values, int k,
                                          TruncationRule rule) {
    if (values.empty()) throw EmptyInputError("characteristic scores of an empty sample");
    if (k < 1) throw ParameterError(fmt::format("CSS depth k must be >= 1, got {}", k));

    std::vector<double> betas;
    double sum = 0.0;
    for (double v : values) sum += v;
    betas.push_back(sum / static_cast<double>(values.size()));

    while (static_cast<int>(betas.size()) < k) {
        const double cut = betas.back();
        double kept_sum = 0.0;
        std::size_t kept = 0;
        for (double v : values) {
            if (rule == TruncationRule::AtLeast ? v >= cut : v > cut) {
                kept_sum += v;
                ++kept;
            }
        }
        if (kept == 0) break;
        const double next = kept_sum / static_cast<double>(kept);
        if (!(next > cut)) break;
        betas.push_back(next);
    }
    return betas;
}

std::vector<double> characteristic_scores(std::span<const Count> reads, int k,
                                          TruncationRule rule) {
    const auto values = widen(reads);
    return characteristic_scores(std::span<const double>(values), k, rule);
}

CssResult classify(std::span<const double> values, std::span<const double> betas) {
    for (std::size_t i = 1; i < betas.size(); ++i) {
        if (!(betas[i] > betas[i - 1]))
            throw ParameterError("characteristic scores must be strictly increasing");
    }
    CssResult out;
    out.betas.assign(betas.begin(), betas.end());
    out.class_counts.assign(betas.size() + 1, 0);
    out.labels.reserve(values.size());
    for (double v : values) {
        // Number of betas <= v is the class index.
        const auto cls = static_cast<std::size_t>(
            std::upper_bound(betas.begin(), betas.end(), v) - betas.begin());
        out.labels.push_back(cls);
        ++out.class_counts[cls];
    }
    out.class_shares.reserve(out.class_counts.size());
    for (auto c : out.class_counts) {
        out.class_shares.push_back(values.empty() ? 0.0
                                                  : static_cast<double>(c) /
                                                        static_cast<double>(values.size()));
    }
    return out;
}

CssResult classify(std::span<const Count> reads, std::span<const double> betas) {
    const auto values = widen(reads);
    return classify(std::span<const double>(values), betas);
}

CssResult css(std::span<const double> values, int k, TruncationRule rule) {
    const auto betas = characteristic_scores(values, k, rule);
    return classify(values, betas);
}

}  // namespace readscale
