// readscale command-line interface.
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "readscale/error.hpp"
#include "readscale/pipeline.hpp"

namespace {

using readscale::RunConfig;

struct Flags {
    std::vector<std::string> inputs;
    std::string out = ".";
    std::string format = "tsv";
    std::string delimiter = ",";
    std::string count = "reads";
    std::string zero_policy = "exclude";
    double alpha = 0.05;
    std::size_t m = 0;
    std::vector<double> z;
    int k = 3;
    std::uint64_t seed = 0;
    std::vector<int> years;
    std::string tie_rule = "rank";
    std::string css_strict = "ge";
    std::string diagnostics;
    std::string provider_url;
    std::string provider_config;
    std::string cache;
    std::string spec;
};

bool given(const CLI::App& sub, const char* name) {
    const auto* opt = sub.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

RunConfig to_config(const Flags& f, const CLI::App& sub) {
    RunConfig c;
    for (const auto& i : f.inputs) c.inputs.emplace_back(i);
    c.out_dir = f.out;
    c.format = f.format == "jsonl" ? readscale::InputFormat::LineJson : readscale::InputFormat::Delimited;
    if (f.delimiter == "\\t" || f.delimiter == "tab") c.delimiter = '\t';
    else if (f.delimiter.size() == 1) c.delimiter = f.delimiter[0];
    else throw readscale::ParameterError("--delimiter must be a single character");
    c.count = f.count == "cites" ? readscale::CountField::Cites : readscale::CountField::Reads;
    c.zero_policy = readscale::parse_zero_policy(f.zero_policy);
    c.alpha = f.alpha;
    if (given(sub, "--m")) c.m = f.m;
    if (!f.z.empty()) c.z = f.z;
    c.k = f.k;
    if (given(sub, "--seed")) c.seed = f.seed;
    c.years = f.years;
    c.tie_rule = readscale::parse_tie_rule(f.tie_rule);
    c.css_rule = readscale::parse_truncation_rule(f.css_strict);
    if (!f.diagnostics.empty()) c.diagnostics = f.diagnostics;
    readscale::validate(c);
    return c;
}

void add_common(CLI::App& sub, Flags& f, bool analysis) {
    sub.add_option("--input", f.inputs, "Corpus file(s)")->required();
    sub.add_option("--out", f.out, "Output directory")->capture_default_str();
    sub.add_option("--format", f.format, "Corpus format")
        ->check(CLI::IsMember({"tsv", "jsonl"}))
        ->capture_default_str();
    sub.add_option("--delimiter", f.delimiter, "Field delimiter for delimited corpora (',' or 'tab')")
        ->capture_default_str();
    sub.add_option("--diagnostics", f.diagnostics, "Write ingestion diagnostics as line-JSON here");
    if (!analysis) return;
    sub.add_option("--count", f.count, "Count to analyse")
        ->check(CLI::IsMember({"reads", "cites"}))
        ->capture_default_str();
    sub.add_option("--zero-policy", f.zero_policy, "Zero handling before logs")
        ->check(CLI::IsMember({"exclude", "shift1"}))
        ->capture_default_str();
    sub.add_option("--alpha", f.alpha, "Significance level")->capture_default_str();
    sub.add_option("--m", f.m, "Bonferroni family size (default: tests run)");
    sub.add_option("--z", f.z, "Top-z percentages (repeatable; default 5 10 20)");
    sub.add_option("--k", f.k, "Number of characteristic scores")->capture_default_str();
    sub.add_option("--seed", f.seed, "Seed (recorded; analysis is deterministic)");
    sub.add_option("--year", f.years, "Restrict to year(s)");
    sub.add_option("--tie-rule", f.tie_rule, "Top-z tie handling")
        ->check(CLI::IsMember({"rank", "threshold"}))
        ->capture_default_str();
    sub.add_option("--css-strict", f.css_strict, "CSS truncation comparison")
        ->check(CLI::IsMember({"ge", "gt"}))
        ->capture_default_str();
}

void print_errors(std::size_t n, const char* what) {
    if (n > 0) std::cerr << fmt::format("warning: {} {} carry an error marker\n", n, what);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Readership distribution universality toolkit"};
    app.require_subcommand(1);
    Flags f;

    auto* ingest = app.add_subcommand("ingest", "Validate and normalise corpus files");
    add_common(*ingest, f, false);

    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus");
    synth->add_option("--spec", f.spec, "Synth spec JSON")->required();
    synth->add_option("--out", f.out, "Output directory")->capture_default_str();
    synth->add_option("--seed", f.seed, "Override the spec seed(s)");
    synth->add_option("--format", f.format, "Corpus format")
        ->check(CLI::IsMember({"tsv", "jsonl"}))
        ->capture_default_str();
    synth->add_option("--delimiter", f.delimiter, "Field delimiter")->capture_default_str();

    auto* fetch = app.add_subcommand("fetch", "Fetch reader counts from a provider and merge them");
    add_common(*fetch, f, false);
    fetch->add_option("--provider-url", f.provider_url, "Provider base URL");
    fetch->add_option("--provider-config", f.provider_config, "Provider config JSON");
    fetch->add_option("--cache", f.cache, "Cache file (default <out>/fetch_cache.jsonl)");

    auto* fit = app.add_subcommand("fit", "Per-stratum lognormal fits and log-normality tests");
    auto* collapse = app.add_subcommand("collapse", "Pooled rescaled fits and CCDF files");
    auto* css = app.add_subcommand("css", "Characteristic scores and scales");
    auto* topz = app.add_subcommand("topz", "Top-z% shares and tolerance counts");
    auto* report = app.add_subcommand("report", "fit + collapse + css + topz");
    for (auto* sub : {fit, collapse, css, topz, report}) add_common(*sub, f, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (ingest->parsed()) {
            const auto config = to_config(f, *ingest);
            const auto r = readscale::cmd_ingest(config);
            std::cerr << fmt::format("accepted {} rejected {}\n", r.accepted, r.rejected);
            for (const auto& n : r.notices) std::cerr << "notice: " << n << '\n';
        } else if (synth->parsed()) {
            auto config = to_config(f, *synth);
            const auto records = readscale::cmd_synth(config, f.spec);
            std::cerr << fmt::format("wrote {} records to {}\n", records.size(),
                                     readscale::corpus_path(config).string());
        } else if (fetch->parsed()) {
            const auto config = to_config(f, *fetch);
            readscale::ProviderConfig provider;
            if (!f.provider_config.empty()) {
                std::ifstream in(f.provider_config);
                if (!in) throw readscale::IoError("cannot open provider config " + f.provider_config);
                provider = readscale::parse_provider_config(in);
            }
            if (!f.provider_url.empty()) provider.base_url = f.provider_url;
            const std::filesystem::path cache =
                f.cache.empty() ? config.out_dir / "fetch_cache.jsonl" : std::filesystem::path(f.cache);
            std::filesystem::create_directories(config.out_dir);
            const auto s = readscale::cmd_fetch(config, provider, cache);
            std::cerr << fmt::format("merged {} excluded {} requests {} cache hits {}\n", s.merged,
                                     s.excluded, s.stats.requests, s.stats.cache_hits);
            for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
        } else if (fit->parsed()) {
            print_errors(readscale::cmd_fit(to_config(f, *fit)), "strata");
        } else if (collapse->parsed()) {
            print_errors(readscale::cmd_collapse(to_config(f, *collapse)), "years");
        } else if (css->parsed()) {
            print_errors(readscale::cmd_css(to_config(f, *css)), "rows");
        } else if (topz->parsed()) {
            print_errors(readscale::cmd_topz(to_config(f, *topz)), "year/z combinations");
        } else if (report->parsed()) {
            print_errors(readscale::cmd_report(to_config(f, *report)), "rows");
        }
    } catch (const readscale::ParameterError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
