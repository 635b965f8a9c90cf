#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "readscale/corpus.hpp"

namespace readscale {

enum class TopVariant { Original, Rescaled };
enum class TieRule {
    Rank,       // exactly floor(z/100 * N), ties broken by ascending id
    Threshold,  // also include every record tied with the last selected value
};

std::string_view to_string(TopVariant variant) noexcept;
TieRule parse_tie_rule(std::string_view name);

/// Tolerance half-width sqrt(z (100 - z) / Nc * sum_i 1 / N_i), in percentage points.
double sigma_z(double z, std::span<const std::size_t> sizes);

struct TopSelection {
    std::vector<std::string> ids;  // in rank order
    std::size_t target = 0;        // floor(z/100 * N)
    std::optional<std::string> notice;
};

/// Global top-z% of one year's records. Rescaled values divide each read by
/// its field's mean over the given records; a field with no reads at all
/// scores zero throughout.
TopSelection top_membership(std::span<const PublicationRecord> records, TopVariant variant,
                            double z, TieRule tie_rule = TieRule::Rank);

struct FieldShare {
    std::string field;
    std::size_t n = 0;         // N_i
    std::size_t selected = 0;  // members in the global top
    double share = 0.0;        // percent of N_i
    bool within = false;       // |share - z| <= sigma_z
};

struct TopZReport {
    int year = 0;
    double z = 0.0;
    TopVariant variant = TopVariant::Original;
    std::vector<FieldShare> fields;  // sorted by field label
    double sigma_z = 0.0;
    std::size_t n_c = 0;
    std::size_t selected = 0;
    std::size_t within_tolerance = 0;
    std::optional<std::string> notice;
};

/// Per-field shares of the global top z% and the count inside z +/- sigma_z.
/// Requires records of a single year spanning at least two fields.
TopZReport top_share_report(std::span<const PublicationRecord> records, double z,
                            TopVariant variant, TieRule tie_rule = TieRule::Rank);

}  // namespace readscale
