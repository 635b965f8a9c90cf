#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "readscale/corpus.hpp"

namespace readscale {

/// Which observations survive a truncation step at score beta.
enum class TruncationRule {
    AtLeast,  // value >= beta (default; matches the [beta_j, beta_j+1) classes)
    Above,    // value > beta
};

TruncationRule parse_truncation_rule(std::string_view name);

/// Characteristic Scores and Scales classification of one sample.
///
/// With k scores there are k + 1 classes: [0, b1), [b1, b2), ..., [bk, inf).
/// Class shares sum to one; `labels[i]` is the 0-based class of observation i.
struct CssResult {
    std::vector<double> betas;
    std::vector<std::size_t> class_counts;
    std::vector<double> class_shares;
    std::vector<std::size_t> labels;

    std::size_t classes() const noexcept { return class_counts.size(); }
};

/// Iterated conditional means: b1 is the sample mean and b(j+1) the mean of the
/// observations kept by `rule` at b(j). Stops early, returning fewer than k
/// scores, when the kept set is empty or the score does not strictly increase.
std::vector<double> characteristic_scores(std::span<const double> values, int k,
                                          TruncationRule rule = TruncationRule::AtLeast);
std::vector<double> characteristic_scores(std::span<const Count> reads, int k,
                                          TruncationRule rule = TruncationRule::AtLeast);

/// Counts observations per half-open class interval. Betas must be strictly increasing.
CssResult classify(std::span<const double> values, std::span<const double> betas);
CssResult classify(std::span<const Count> reads, std::span<const double> betas);

/// characteristic_scores followed by classify.
CssResult css(std::span<const double> values, int k,
              TruncationRule rule = TruncationRule::AtLeast);

}  // namespace readscale
