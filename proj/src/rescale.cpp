#include "readscale/rescale.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "readscale/error.hpp"

namespace readscale {

RescaledSample rescale_counts(GroupKey key, std::span<const Count> counts) {
    if (counts.empty()) throw EmptyInputError("cannot rescale an empty group");
    const auto stats = count_stats(counts);
    if (!(stats.r_mean > 0.0))
        throw AllUnreadGroupError(
            fmt::format("group ({}, {}) has mean zero and cannot be rescaled", key.field, key.year));

    RescaledSample out{std::move(key), {}, stats.r_mean};
    out.values.reserve(counts.size());
    for (Count c : counts) out.values.push_back(static_cast<double>(c) / out.r0);
    return out;
}

RescaledSample rescale_group(const Group& group, CountField field) {
    const auto counts = field == CountField::Reads ? group.reads() : group.cites();
    return rescale_counts(group.key, counts);
}

std::vector<double> collapse(std::span<const RescaledSample> samples) {
    if (samples.empty()) throw EmptyInputError("nothing to collapse");
    std::vector<const RescaledSample*> order;
    std::size_t total = 0;
    for (const auto& s : samples) {
        order.push_back(&s);
        total += s.values.size();
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto* a, const auto* b) { return a->key < b->key; });
    std::vector<double> merged;
    merged.reserve(total);
    for (const auto* s : order) merged.insert(merged.end(), s->values.begin(), s->values.end());
    return merged;
}

CcdfCurve ccdf(std::span<const double> values) {
    if (values.empty()) throw EmptyInputError("CCDF of an empty sample");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());

    CcdfCurve curve;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        curve.points.push_back({sorted[i], static_cast<double>(sorted.size() - i) / n});
        i = j;
    }
    return curve;
}

double CcdfCurve::at(double t) const noexcept {
    const auto it = std::lower_bound(points.begin(), points.end(), t,
                                     [](const CcdfPoint& pt, double v) { return pt.x < v; });
    return it == points.end() ? 0.0 : it->p;
}

double ccdf_distance(std::span<const double> a, std::span<const double> b, double upper) {
    const auto ca = ccdf(a);
    const auto cb = ccdf(b);
    double d = 0.0;
    // Both curves are constant on (x_k, x_k+1], so it suffices to look at each
    // sample point and just above it.
    auto scan = [&](const CcdfCurve& c) {
        for (const auto& pt : c.points) {
            if (pt.x > upper) break;
            d = std::max(d, std::abs(ca.at(pt.x) - cb.at(pt.x)));
            const double right = std::nextafter(pt.x, std::numeric_limits<double>::infinity());
            if (right <= upper) d = std::max(d, std::abs(ca.at(right) - cb.at(right)));
        }
    };
    scan(ca);
    scan(cb);
    return d;
}

void write_ccdf_tsv(std::ostream& out, const CcdfCurve& curve) {
    for (const auto& pt : curve.points) out << fmt::format("{}\t{}\n", pt.x, pt.p);
}

std::string file_slug(std::string_view label) {
    std::string out;
    bool pending = false;
    for (unsigned char c : label) {
        if (std::isalnum(c)) {
            if (pending && !out.empty()) out += '_';
            pending = false;
            out += static_cast<char>(c);
        } else {
            pending = true;
        }
    }
    return out.empty() ? std::string("unnamed") : out;
}

}  // namespace readscale
