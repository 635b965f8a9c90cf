#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "readscale/corpus.hpp"

namespace readscale {

enum class Discretization {
    RoundHalfUp,     // floor(v + 0.5), never below 0
    CeilAtLeastOne,  // max(1, ceil(v))
    None,            // continuous values; only generate_values accepts this
};

struct SynthField {
    std::string label;
    std::size_t n = 0;
    double mu = 0.0;
    double sigma2 = 1.0;
};

/// Parameters of a seeded lognormal corpus for one publication year.
struct SynthSpec {
    std::vector<SynthField> fields;
    int year = 2010;
    std::uint64_t seed = 0;
    Discretization discretization = Discretization::RoundHalfUp;
    double zero_inflation = 0.0;  // probability of forcing a zero read
};

/// Identity of the random source, recorded alongside generated corpora.
///
/// Field i draws from std::mt19937_64 seeded with splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15).
/// Each observation consumes two 64-bit outputs: u1 = ((x >> 11) + 0.5) / 2^53
/// feeds the AS 241 inverse normal CDF, and u2 (same mapping) decides zero
/// inflation (zero when u2 < zero_inflation).
inline constexpr std::string_view kGeneratorName =
    "mt19937_64+splitmix64-substreams+as241-inverse-normal/v1";

std::uint64_t splitmix64(std::uint64_t state) noexcept;
std::uint64_t field_seed(std::uint64_t seed, std::size_t field_index) noexcept;

/// exp(mu + sigma2 / 2). sigma2 = 0 is accepted as the degenerate limit.
double lognormal_mean(double mu, double sigma2);

/// mu giving a lognormal with the requested mean and log-variance.
double mu_for_mean(double mean, double sigma2);

void validate_spec(const SynthSpec& spec);

/// Undiscretized draws per field (zero inflation applied), in field order.
std::vector<std::vector<double>> generate_values(const SynthSpec& spec);

/// Discretized corpus; ids are "syn<year>-f<field index>-<draw index>".
std::vector<PublicationRecord> generate_corpus(const SynthSpec& spec);

/// Reads one spec object, or an array of them. Each field gives "label", "n",
/// "sigma2" and either "mu" or "mean" (the lognormal mean, converted to mu).
std::vector<SynthSpec> parse_synth_specs(std::istream& in);
std::string synth_spec_json(const SynthSpec& spec);

}  // namespace readscale
