#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "readscale/corpus.hpp"
#include "readscale/css.hpp"
#include "readscale/distfit.hpp"
#include "readscale/fetch.hpp"
#include "readscale/ingest.hpp"
#include "readscale/rescale.hpp"
#include "readscale/topz.hpp"

namespace readscale {

/// Options shared by every analysis command.
struct RunConfig {
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path out_dir = ".";
    InputFormat format = InputFormat::Delimited;
    char delimiter = ',';
    CountField count = CountField::Reads;
    ZeroPolicy zero_policy = ZeroPolicy::Exclude;
    double alpha = 0.05;
    std::optional<std::size_t> m;  // default: number of tests actually run
    std::vector<double> z{5.0, 10.0, 20.0};
    int k = 3;
    std::optional<std::uint64_t> seed;
    std::vector<int> years;  // empty: every year present
    TieRule tie_rule = TieRule::Rank;
    TruncationRule css_rule = TruncationRule::AtLeast;
    std::optional<std::filesystem::path> diagnostics;
    YearRange year_range{};
};

void validate(const RunConfig& config);

/// A cell carries its rounded display text (TSV) and full-precision value (JSONL).
struct Cell {
    std::string text;
    nlohmann::ordered_json value;
};

struct Table {
    std::string name;  // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

/// Writes <name>.tsv and <name>.jsonl into `dir`.
void write_table(const Table& table, const std::filesystem::path& dir);

/// Loads and concatenates every input. Writes the diagnostics sidecar when
/// configured. Throws on fatal schema or I/O errors.
struct LoadedCorpus {
    std::vector<PublicationRecord> records;
    IngestReport report;
};
LoadedCorpus load_corpus(const RunConfig& config);

/// Keeps the configured years and, for CountField::Cites, swaps citation
/// counts into `reads` (dropping records without one).
std::vector<PublicationRecord> select_records(std::span<const PublicationRecord> records,
                                              const RunConfig& config);

struct FitRow {
    GroupKey key;
    std::size_t obs = 0;
    std::optional<GroupStats> stats;
    std::optional<SwTestResult> sw;
    std::optional<LognormalFit> fit;
    std::optional<LognormalFit> fit_rescaled;
    std::string error;
};

struct FitTable {
    std::vector<FitRow> rows;
    std::size_t m = 0;  // Bonferroni family size used
};

FitTable run_fit(std::span<const PublicationRecord> records, const RunConfig& config);
Table fit_table(const FitTable& fit);

struct CollapseRow {
    int year = 0;
    std::size_t obs = 0;
    std::size_t strata = 0;
    std::vector<std::string> excluded;  // strata that could not be rescaled
    std::optional<LognormalFit> fit;
    std::optional<SwTestResult> sw;
    std::string error;
};

struct StratumCurves {
    GroupKey key;
    CcdfCurve original;
    CcdfCurve rescaled;
};

struct CollapseYear {
    CollapseRow row;
    std::vector<double> merged;
    std::vector<StratumCurves> strata;
};

std::vector<CollapseYear> run_collapse(std::span<const PublicationRecord> records,
                                       const RunConfig& config);
Table collapse_table(std::span<const CollapseYear> years);
/// ccdf_<field>_<year>.tsv (rescaled), ccdf_raw_<field>_<year>.tsv and
/// ccdf_merged_<year>.tsv. Returns the written file names.
std::vector<std::string> write_ccdf_files(std::span<const CollapseYear> years,
                                          const std::filesystem::path& dir);

struct CssYear {
    int year = 0;
    CssResult result;
    std::string error;
};

struct CssStratum {
    GroupKey key;
    std::size_t n = 0;
    std::optional<CssResult> result;
    std::string error;
};

struct CssRun {
    std::vector<CssYear> overall;
    std::vector<CssStratum> strata;
    int k = 3;
};

CssRun run_css(std::span<const PublicationRecord> records, const RunConfig& config);
Table css_overall_table(const CssRun& run);
Table css_strata_table(const CssRun& run);

struct TopzRun {
    std::vector<TopZReport> reports;  // (year, z, variant) order
    std::vector<std::string> errors;
};

TopzRun run_topz(std::span<const PublicationRecord> records, const RunConfig& config);
Table topz_summary_table(const TopzRun& run);
Table topz_field_table(const TopZReport& report);

/// Roman numeral class label (1-based): I, II, III, IV, ...
std::string class_label(std::size_t index);

/// Command entry points: load, analyse, write outputs. Return the number of
/// rows that carry a per-stratum error (never fatal).
std::size_t cmd_fit(const RunConfig& config);
std::size_t cmd_collapse(const RunConfig& config);
std::size_t cmd_css(const RunConfig& config);
std::size_t cmd_topz(const RunConfig& config);
std::size_t cmd_report(const RunConfig& config);

/// Normalizes inputs into one corpus file plus validation diagnostics.
IngestReport cmd_ingest(const RunConfig& config);

/// Generates corpus.<ext> and corpus.meta.json. A seed, if given, replaces
/// spec i's seed with seed + i.
std::vector<PublicationRecord> cmd_synth(const RunConfig& config,
                                         const std::filesystem::path& spec_path);

struct FetchSummary {
    std::size_t merged = 0;
    std::size_t excluded = 0;
    FetchStats stats;
    std::vector<std::string> warnings;
};

FetchSummary cmd_fetch(const RunConfig& config, const ProviderConfig& provider,
                       const std::filesystem::path& cache_path);

std::filesystem::path corpus_path(const RunConfig& config);

}  // namespace readscale
