#include "readscale/synth.hpp"

#include <cmath>
#include <istream>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "readscale/error.hpp"
#include "readscale/normal.hpp"

namespace readscale {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

double unit_open(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

Discretization parse_discretization(std::string_view name) {
    if (name == "round") return Discretization::RoundHalfUp;
    if (name == "ceil1") return Discretization::CeilAtLeastOne;
    if (name == "none") return Discretization::None;
    throw ParameterError(fmt::format("unknown discretization '{}'", name));
}

std::string_view to_string(Discretization d) {
    switch (d) {
        case Discretization::RoundHalfUp: return "round";
        case Discretization::CeilAtLeastOne: return "ceil1";
        case Discretization::None: return "none";
    }
    return "round";
}

Count discretize(double v, Discretization d) {
    if (d == Discretization::CeilAtLeastOne) return std::max<Count>(1, static_cast<Count>(std::ceil(v)));
    return std::max<Count>(0, static_cast<Count>(std::floor(v + 0.5)));
}

SynthSpec spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SchemaError("synth spec must be a JSON object");
    SynthSpec spec;
    spec.year = j.value("year", spec.year);
    spec.seed = j.value("seed", spec.seed);
    spec.discretization = parse_discretization(j.value("discretization", std::string("round")));
    spec.zero_inflation = j.value("zero_inflation", 0.0);
    if (!j.contains("fields") || !j["fields"].is_array())
        throw SchemaError("synth spec needs a 'fields' array");
    for (const auto& f : j["fields"]) {
        SynthField field;
        field.label = f.at("label").get<std::string>();
        field.n = f.at("n").get<std::size_t>();
        field.sigma2 = f.at("sigma2").get<double>();
        if (f.contains("mu")) field.mu = f["mu"].get<double>();
        else if (f.contains("mean")) field.mu = mu_for_mean(f["mean"].get<double>(), field.sigma2);
        else throw SchemaError(fmt::format("field '{}' needs 'mu' or 'mean'", field.label));
        spec.fields.push_back(std::move(field));
    }
    validate_spec(spec);
    return spec;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t state) noexcept {
    std::uint64_t z = state + kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t field_seed(std::uint64_t seed, std::size_t field_index) noexcept {
    return splitmix64(seed + kGolden * (static_cast<std::uint64_t>(field_index) + 1));
}

double lognormal_mean(double mu, double sigma2) {
    if (!(sigma2 >= 0.0)) throw ParameterError("sigma2 must be non-negative");
    return std::exp(mu + sigma2 / 2.0);
}

double mu_for_mean(double mean, double sigma2) {
    if (!(mean > 0.0)) throw ParameterError("lognormal mean must be positive");
    return std::log(mean) - sigma2 / 2.0;
}

void validate_spec(const SynthSpec& spec) {
    if (spec.fields.empty()) throw ParameterError("synth spec has no fields");
    if (!(spec.zero_inflation >= 0.0 && spec.zero_inflation < 1.0))
        throw ParameterError("zero_inflation must lie in [0, 1)");
    for (const auto& f : spec.fields) {
        if (f.n < 1) throw ParameterError(fmt::format("field '{}' needs n >= 1", f.label));
        if (!(f.sigma2 > 0.0))
            throw ParameterError(fmt::format("field '{}' needs sigma2 > 0", f.label));
        if (!std::isfinite(f.mu)) throw ParameterError(fmt::format("field '{}' has bad mu", f.label));
    }
}

std::vector<std::vector<double>> generate_values(const SynthSpec& spec) {
    validate_spec(spec);
    std::vector<std::vector<double>> out;
    out.reserve(spec.fields.size());
    for (std::size_t fi = 0; fi < spec.fields.size(); ++fi) {
        const auto& f = spec.fields[fi];
        std::mt19937_64 engine(field_seed(spec.seed, fi));
        const double sigma = std::sqrt(f.sigma2);
        std::vector<double> values;
        values.reserve(f.n);
        for (std::size_t i = 0; i < f.n; ++i) {
            const double z = normal_quantile(unit_open(engine()));
            const double inflate = unit_open(engine());
            values.push_back(inflate < spec.zero_inflation ? 0.0 : std::exp(f.mu + sigma * z));
        }
        out.push_back(std::move(values));
    }
    return out;
}

std::vector<PublicationRecord> generate_corpus(const SynthSpec& spec) {
    if (spec.discretization == Discretization::None)
        throw ParameterError(
            "discretization 'none' yields real values; use generate_values for continuous draws");
    const auto values = generate_values(spec);
    std::vector<PublicationRecord> records;
    for (std::size_t fi = 0; fi < values.size(); ++fi) {
        for (std::size_t i = 0; i < values[fi].size(); ++i) {
            const double v = values[fi][i];
            PublicationRecord r;
            r.id = fmt::format("syn{}-f{:03}-{:06}", spec.year, fi, i);
            r.field = spec.fields[fi].label;
            r.year = spec.year;
            r.reads = v == 0.0 ? 0 : discretize(v, spec.discretization);
            records.push_back(std::move(r));
        }
    }
    return records;
}

std::vector<SynthSpec> parse_synth_specs(std::istream& in) {
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw SchemaError("synth spec is not valid JSON");
    std::vector<SynthSpec> specs;
    if (j.is_array()) {
        for (const auto& item : j) specs.push_back(spec_from_json(item));
    } else {
        specs.push_back(spec_from_json(j));
    }
    if (specs.empty()) throw SchemaError("synth spec array is empty");
    return specs;
}

std::string synth_spec_json(const SynthSpec& spec) {
    nlohmann::ordered_json j;
    j["year"] = spec.year;
    j["seed"] = spec.seed;
    j["discretization"] = to_string(spec.discretization);
    j["zero_inflation"] = spec.zero_inflation;
    j["fields"] = nlohmann::ordered_json::array();
    for (const auto& f : spec.fields) {
        nlohmann::ordered_json jf;
        jf["label"] = f.label;
        jf["n"] = f.n;
        jf["mu"] = f.mu;
        jf["sigma2"] = f.sigma2;
        j["fields"].push_back(jf);
    }
    return j.dump(2);
}

}  // namespace readscale
