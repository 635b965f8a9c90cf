#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "readscale/corpus.hpp"

namespace readscale {

enum class InputFormat { Delimited, LineJson };

struct IngestOptions {
    InputFormat format = InputFormat::Delimited;
    char delimiter = ',';
    YearRange years{};
};

struct Diagnostic {
    std::size_t line = 0;  // 1-based; header is line 1 in delimited input
    std::string reason;

    bool operator==(const Diagnostic&) const = default;
};

/// accepted + rejected equals the number of data rows seen; diagnostics is
/// non-empty exactly when something was rejected.
struct IngestReport {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::vector<Diagnostic> diagnostics;
    std::vector<std::string> notices;  // non-fatal, e.g. ignored columns
};

struct ParseResult {
    std::vector<PublicationRecord> records;
    IngestReport report;
};

/// A row whose reads may still be unknown (input to the fetch step).
struct PendingRecord {
    std::string id;
    std::string field;
    int year = 0;
    std::optional<Count> reads;
    std::optional<Count> cites;
};

struct PendingParseResult {
    std::vector<PendingRecord> records;
    IngestReport report;
};

/// Parses a corpus. Malformed rows are skipped and reported; a missing
/// mandatory column raises SchemaError, an unreadable stream IoError.
ParseResult parse_records(std::istream& in, const IngestOptions& options = {});
ParseResult parse_records_file(const std::filesystem::path& path,
                               const IngestOptions& options = {});

/// Same as parse_records but an empty or absent reads value is allowed.
PendingParseResult parse_pending(std::istream& in, const IngestOptions& options = {});
PendingParseResult parse_pending_file(const std::filesystem::path& path,
                                      const IngestOptions& options = {});

/// Flags duplicate ids, out-of-range years and negative counts. Diagnostic
/// line numbers are 1-based record positions.
IngestReport validate(std::span<const PublicationRecord> records, const YearRange& years = {});

void write_records(std::ostream& out, std::span<const PublicationRecord> records,
                   InputFormat format, char delimiter = ',');

/// Writes one JSON object per diagnostic (and per notice) for sidecar reports.
void write_diagnostics(std::ostream& out, const IngestReport& report);

/// Splits one delimited line, honouring double-quoted fields ("" escapes a quote).
std::vector<std::string> split_delimited(std::string_view line, char delimiter);
std::string quote_delimited(std::string_view value, char delimiter);

}  // namespace readscale
