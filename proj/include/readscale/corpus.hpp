#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace readscale {

using Count = std::int64_t;

/// One publication with its readership (and optionally citation) count.
struct PublicationRecord {
    std::string id;
    std::string field;
    int year = 0;
    Count reads = 0;
    std::optional<Count> cites;

    bool operator==(const PublicationRecord&) const = default;
};

struct YearRange {
    int min = 1900;
    int max = 2100;

    bool contains(int year) const noexcept { return year >= min && year <= max; }
};

/// (subject category, publication year) stratum key. Ordered by field, then year.
struct GroupKey {
    std::string field;
    int year = 0;

    auto operator<=>(const GroupKey&) const = default;
    bool operator==(const GroupKey&) const = default;
};

struct Group {
    GroupKey key;
    std::vector<PublicationRecord> records;

    std::vector<Count> reads() const;
    /// Citation counts of the members that carry one, in member order.
    std::vector<Count> cites() const;
};

struct GroupStats {
    std::size_t n = 0;
    double r_mean = 0.0;  // R0
    Count r_max = 0;
    double zero_share = 0.0;
};

using GroupMap = std::map<GroupKey, Group>;

std::string_view trim(std::string_view s) noexcept;

/// Partitions records into (field, year) strata. Record order inside each
/// group follows input order. Throws EmptyInputError or DuplicateIdError.
GroupMap group_by_field_year(std::span<const PublicationRecord> records);

GroupStats group_stats(const Group& group);
GroupStats count_stats(std::span<const Count> counts);

/// Ids that occur more than once, in order of first repetition.
std::vector<std::string> duplicate_ids(std::span<const PublicationRecord> records);

/// Distinct years present, ascending.
std::vector<int> years_of(std::span<const PublicationRecord> records);

std::vector<PublicationRecord> records_of_year(std::span<const PublicationRecord> records,
                                               int year);

}  // namespace readscale
