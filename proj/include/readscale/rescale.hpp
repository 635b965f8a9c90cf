#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "readscale/corpus.hpp"

namespace readscale {

/// Which per-record count a pipeline step works on.
enum class CountField { Reads, Cites };

/// Counts of a group divided by the group's own mean (r_r = r / R0).
struct RescaledSample {
    GroupKey key;
    std::vector<double> values;
    double r0 = 0.0;
};

struct CcdfPoint {
    double x = 0.0;
    double p = 0.0;  // fraction of the sample >= x

    bool operator==(const CcdfPoint&) const = default;
};

struct CcdfCurve {
    std::vector<CcdfPoint> points;

    /// Fraction of the sample >= t, read off the curve.
    double at(double t) const noexcept;
};

RescaledSample rescale_counts(GroupKey key, std::span<const Count> counts);

/// Throws AllUnreadGroupError when the group mean is zero.
RescaledSample rescale_group(const Group& group, CountField field = CountField::Reads);

/// Concatenates the samples in GroupKey order (input order is irrelevant).
std::vector<double> collapse(std::span<const RescaledSample> samples);

CcdfCurve ccdf(std::span<const double> values);

/// sup |P_a(X >= x) - P_b(X >= x)| over all x <= upper.
double ccdf_distance(std::span<const double> a, std::span<const double> b, double upper);

/// Two-column (x, p) TSV, no header, full round-trip precision.
void write_ccdf_tsv(std::ostream& out, const CcdfCurve& curve);

/// File-name-safe form of a field label: runs of non-alphanumerics become '_'.
std::string file_slug(std::string_view label);

}  // namespace readscale
