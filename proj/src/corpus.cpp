#include "readscale/corpus.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "readscale/error.hpp"

namespace readscale {

DuplicateIdError::DuplicateIdError(std::vector<std::string> ids)
    : Error(fmt::format("duplicate id(s): {}", fmt::join(ids, ", "))), ids_(std::move(ids)) {}

std::string_view trim(std::string_view s) noexcept {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

std::vector<Count> Group::reads() const {
    std::vector<Count> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.reads);
    return out;
}

std::vector<Count> Group::cites() const {
    std::vector<Count> out;
    for (const auto& r : records)
        if (r.cites) out.push_back(*r.cites);
    return out;
}

std::vector<std::string> duplicate_ids(std::span<const PublicationRecord> records) {
    std::unordered_map<std::string_view, int> seen;
    std::vector<std::string> dups;
    for (const auto& r : records) {
        if (++seen[r.id] == 2) dups.push_back(r.id);
    }
    return dups;
}

GroupMap group_by_field_year(std::span<const PublicationRecord> records) {
    if (records.empty()) throw EmptyInputError("empty corpus: no records to group");
    if (auto dups = duplicate_ids(records); !dups.empty()) throw DuplicateIdError(std::move(dups));

    GroupMap groups;
    for (const auto& r : records) {
        GroupKey key{std::string(trim(r.field)), r.year};
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) it->second.key = std::move(key);
        it->second.records.push_back(r);
    }
    return groups;
}

GroupStats count_stats(std::span<const Count> counts) {
    if (counts.empty()) throw EmptyInputError("group statistics of an empty group");
    Count sum = 0;
    Count max = counts.front();
    std::size_t zeros = 0;
    for (Count c : counts) {
        sum += c;
        max = std::max(max, c);
        if (c == 0) ++zeros;
    }
    const auto n = counts.size();
    return GroupStats{n, static_cast<double>(sum) / static_cast<double>(n), max,
                      static_cast<double>(zeros) / static_cast<double>(n)};
}

GroupStats group_stats(const Group& group) {
    const auto reads = group.reads();
    return count_stats(reads);
}

std::vector<int> years_of(std::span<const PublicationRecord> records) {
    std::set<int> years;
    for (const auto& r : records) years.insert(r.year);
    return {years.begin(), years.end()};
}

std::vector<PublicationRecord> records_of_year(std::span<const PublicationRecord> records,
                                               int year) {
    std::vector<PublicationRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [year](const PublicationRecord& r) { return r.year == year; });
    return out;
}

}  // namespace readscale
