#include "readscale/topz.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "readscale/error.hpp"

namespace readscale {
namespace {

void check_z(double z) {
    if (!(z > 0.0 && z < 100.0))
        throw ParameterError(fmt::format("z must lie in (0, 100), got {}", z));
}

std::vector<double> selection_values(std::span<const PublicationRecord> records,
                                     TopVariant variant) {
    std::vector<double> values;
    values.reserve(records.size());
    if (variant == TopVariant::Original) {
        for (const auto& r : records) values.push_back(static_cast<double>(r.reads));
        return values;
    }
    std::map<std::string_view, std::pair<Count, std::size_t>> totals;
    for (const auto& r : records) {
        auto& t = totals[r.field];
        t.first += r.reads;
        ++t.second;
    }
    for (const auto& r : records) {
        const auto& [sum, n] = totals[r.field];
        const double r0 = static_cast<double>(sum) / static_cast<double>(n);
        values.push_back(r0 > 0.0 ? static_cast<double>(r.reads) / r0 : 0.0);
    }
    return values;
}

}  // namespace

std::string_view to_string(TopVariant variant) noexcept {
    return variant == TopVariant::Original ? "original" : "rescaled";
}

TieRule parse_tie_rule(std::string_view name) {
    if (name == "rank") return TieRule::Rank;
    if (name == "threshold") return TieRule::Threshold;
    throw ParameterError(fmt::format("unknown tie rule '{}' (expected rank or threshold)", name));
}

double sigma_z(double z, std::span<const std::size_t> sizes) {
    check_z(z);
    if (sizes.empty()) throw EmptyInputError("sigma_z needs at least one field size");
    double inv_sum = 0.0;
    for (auto n : sizes) {
        if (n < 1) throw ParameterError("field sizes must be >= 1");
        inv_sum += 1.0 / static_cast<double>(n);
    }
    return std::sqrt(z * (100.0 - z) / static_cast<double>(sizes.size()) * inv_sum);
}

TopSelection top_membership(std::span<const PublicationRecord> records, TopVariant variant,
                            double z, TieRule tie_rule) {
    check_z(z);
    if (records.empty()) throw EmptyInputError("top membership over an empty record set");
    for (const auto& r : records) {
        if (r.year != records.front().year)
            throw ParameterError("top membership expects records of a single year");
    }
    if (auto dups = duplicate_ids(records); !dups.empty()) throw DuplicateIdError(std::move(dups));

    const auto values = selection_values(records, variant);
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return records[a].id < records[b].id;
    });

    TopSelection sel;
    sel.target = static_cast<std::size_t>(
        std::floor(z * static_cast<double>(records.size()) / 100.0));
    if (sel.target == 0) {
        sel.notice = fmt::format("top {}% of {} records selects nothing", z, records.size());
        return sel;
    }
    std::size_t take = sel.target;
    if (tie_rule == TieRule::Threshold) {
        const double cut = values[order[take - 1]];
        while (take < order.size() && values[order[take]] == cut) ++take;
    }
    sel.ids.reserve(take);
    for (std::size_t i = 0; i < take; ++i) sel.ids.push_back(records[order[i]].id);
    return sel;
}

TopZReport top_share_report(std::span<const PublicationRecord> records, double z,
                            TopVariant variant, TieRule tie_rule) {
    const auto selection = top_membership(records, variant, z, tie_rule);

    std::map<std::string, FieldShare> by_field;
    std::map<std::string_view, const PublicationRecord*> by_id;
    for (const auto& r : records) {
        auto& f = by_field[r.field];
        f.field = r.field;
        ++f.n;
        by_id.emplace(r.id, &r);
    }
    if (by_field.size() < 2)
        throw ParameterError("top share report needs at least two fields");
    for (const auto& id : selection.ids) ++by_field[by_id.at(id)->field].selected;

    TopZReport report;
    report.year = records.front().year;
    report.z = z;
    report.variant = variant;
    report.n_c = by_field.size();
    report.selected = selection.ids.size();
    report.notice = selection.notice;

    std::vector<std::size_t> sizes;
    for (const auto& [_, f] : by_field) sizes.push_back(f.n);
    report.sigma_z = sigma_z(z, sizes);

    for (auto& [_, f] : by_field) {
        f.share = 100.0 * static_cast<double>(f.selected) / static_cast<double>(f.n);
        f.within = std::abs(f.share - z) <= report.sigma_z;
        if (f.within) ++report.within_tolerance;
        report.fields.push_back(std::move(f));
    }
    return report;
}

}  // namespace readscale
