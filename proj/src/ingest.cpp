#include "readscale/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "readscale/error.hpp"

namespace readscale {
namespace {

using ordered_json = nlohmann::ordered_json;

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        if (c < 0x80) extra = 0;
        else if ((c >> 5) == 0x6) extra = 1;
        else if ((c >> 4) == 0xE) extra = 2;
        else if ((c >> 3) == 0x1E) extra = 3;
        else return false;
        if (i + extra >= s.size() && extra > 0) return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
        }
        i += extra + 1;
    }
    return true;
}

std::optional<std::vector<std::string>> try_split(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    bool field_start = true;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && field_start) {
            quoted = true;
            field_start = false;
        } else if (c == delim) {
            out.push_back(std::move(cur));
            cur.clear();
            field_start = true;
        } else {
            cur.push_back(c);
            field_start = false;
        }
    }
    if (quoted) return std::nullopt;
    out.push_back(std::move(cur));
    return out;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

// Row-level outcome shared by the delimited and line-JSON readers.
struct RowFields {
    std::string id;
    std::string field;
    std::optional<std::string> year;
    std::optional<std::string> reads;
    std::optional<std::string> cites;
};

struct RowOutcome {
    std::optional<PendingRecord> record;
    std::string reason;
};

RowOutcome check_row(const RowFields& row, const YearRange& years, bool require_reads) {
    RowOutcome out;
    PendingRecord rec;
    rec.id = std::string(trim(row.id));
    if (rec.id.empty()) return {std::nullopt, "missing id"};
    rec.field = std::string(trim(row.field));
    if (rec.field.empty()) return {std::nullopt, "missing field"};

    if (!row.year || trim(*row.year).empty()) return {std::nullopt, "missing year"};
    const auto year = parse_int<int>(*row.year);
    if (!year) return {std::nullopt, "malformed year"};
    if (!years.contains(*year)) return {std::nullopt, "year out of range"};
    rec.year = *year;

    if (!row.reads || trim(*row.reads).empty()) {
        if (require_reads) return {std::nullopt, "missing reads"};
    } else {
        const auto reads = parse_int<Count>(*row.reads);
        if (!reads) return {std::nullopt, "malformed reads"};
        if (*reads < 0) return {std::nullopt, "negative reads"};
        rec.reads = *reads;
    }

    if (row.cites && !trim(*row.cites).empty()) {
        const auto cites = parse_int<Count>(*row.cites);
        if (!cites) return {std::nullopt, "malformed cites"};
        if (*cites < 0) return {std::nullopt, "negative cites"};
        rec.cites = *cites;
    }
    out.record = std::move(rec);
    return out;
}

constexpr std::array<std::string_view, 4> kMandatory{"id", "field", "year", "reads"};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

PendingParseResult parse_delimited(std::istream& in, const IngestOptions& opt,
                                   bool require_reads) {
    PendingParseResult result;
    std::string line;
    std::size_t lineno = 0;

    // Header.
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) {
            have_header = true;
            break;
        }
    }
    if (in.bad()) throw IoError("read error while reading header");
    if (!have_header) throw SchemaError("missing header row");

    const auto header = try_split(line, opt.delimiter);
    if (!header) throw SchemaError("malformed header row (unterminated quote)");
    std::unordered_map<std::string, std::size_t> col;
    std::vector<std::string> unknown;
    for (std::size_t i = 0; i < header->size(); ++i) {
        const auto name = lower(trim((*header)[i]));
        const bool known = name == "cites" ||
                           std::find(kMandatory.begin(), kMandatory.end(), name) != kMandatory.end();
        if (!known) {
            unknown.push_back(name);
            continue;
        }
        if (col.count(name)) throw SchemaError(fmt::format("duplicate column '{}'", name));
        col[name] = i;
    }
    for (auto name : kMandatory) {
        if (name == "reads" && !require_reads) continue;
        if (!col.count(std::string(name)))
            throw SchemaError(fmt::format("missing mandatory column '{}'", name));
    }
    if (!unknown.empty()) {
        std::string names;
        for (const auto& u : unknown) names += (names.empty() ? "" : ", ") + u;
        result.report.notices.push_back(fmt::format("ignored unknown column(s): {}", names));
    }
    std::size_t needed = 0;
    for (const auto& [name, idx] : col) needed = std::max(needed, idx + 1);

    auto reject = [&](std::size_t at, std::string reason) {
        ++result.report.rejected;
        result.report.diagnostics.push_back({at, std::move(reason)});
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (!valid_utf8(line)) {
            reject(lineno, "invalid UTF-8");
            continue;
        }
        const auto cells = try_split(line, opt.delimiter);
        if (!cells) {
            reject(lineno, "unterminated quote");
            continue;
        }
        if (cells->size() < needed) {
            // A trailing optional column may be omitted entirely.
            const bool only_optional_missing = [&] {
                for (const auto& [name, idx] : col) {
                    if (idx >= cells->size() && (name != "cites" && (require_reads || name != "reads")))
                        return false;
                }
                return true;
            }();
            if (!only_optional_missing) {
                reject(lineno, fmt::format("wrong column count ({} of {})", cells->size(), needed));
                continue;
            }
        }
        auto cell = [&](const char* name) -> std::optional<std::string> {
            const auto it = col.find(name);
            if (it == col.end() || it->second >= cells->size()) return std::nullopt;
            return (*cells)[it->second];
        };
        RowFields row{cell("id").value_or(""), cell("field").value_or(""), cell("year"),
                      cell("reads"), cell("cites")};
        auto outcome = check_row(row, opt.years, require_reads);
        if (!outcome.record) {
            reject(lineno, std::move(outcome.reason));
            continue;
        }
        ++result.report.accepted;
        result.records.push_back(std::move(*outcome.record));
    }
    if (in.bad()) throw IoError(fmt::format("read error after line {}", lineno));
    return result;
}

std::optional<std::string> json_scalar(const nlohmann::json& obj, const char* key,
                                       std::string& error) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (it->is_number_integer() || it->is_number_unsigned()) return it->dump();
    if (it->is_string()) return it->get<std::string>();
    error = fmt::format("malformed {}", key);
    return std::nullopt;
}

PendingParseResult parse_line_json(std::istream& in, const IngestOptions& opt,
                                   bool require_reads) {
    PendingParseResult result;
    std::string line;
    std::size_t lineno = 0;
    bool unknown_noticed = false;

    auto reject = [&](std::string reason) {
        ++result.report.rejected;
        result.report.diagnostics.push_back({lineno, std::move(reason)});
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        if (!valid_utf8(line)) {
            reject("invalid UTF-8");
            continue;
        }
        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            reject("malformed JSON");
            continue;
        }
        if (!unknown_noticed) {
            std::string names;
            for (const auto& [key, _] : obj.items()) {
                if (key != "cites" && std::find(kMandatory.begin(), kMandatory.end(), key) ==
                                          kMandatory.end())
                    names += (names.empty() ? "" : ", ") + key;
            }
            if (!names.empty()) {
                result.report.notices.push_back(fmt::format("ignored unknown key(s): {}", names));
                unknown_noticed = true;
            }
        }
        const auto id = obj.find("id");
        const auto field = obj.find("field");
        if (id == obj.end() || !id->is_string()) {
            reject(id == obj.end() || id->is_null() ? "missing id" : "malformed id");
            continue;
        }
        if (field == obj.end() || !field->is_string()) {
            reject(field == obj.end() || field->is_null() ? "missing field" : "malformed field");
            continue;
        }
        std::string error;
        RowFields row{id->get<std::string>(), field->get<std::string>(), {}, {}, {}};
        row.year = json_scalar(obj, "year", error);
        if (error.empty()) row.reads = json_scalar(obj, "reads", error);
        if (error.empty()) row.cites = json_scalar(obj, "cites", error);
        if (!error.empty()) {
            reject(std::move(error));
            continue;
        }
        auto outcome = check_row(row, opt.years, require_reads);
        if (!outcome.record) {
            reject(std::move(outcome.reason));
            continue;
        }
        ++result.report.accepted;
        result.records.push_back(std::move(*outcome.record));
    }
    if (in.bad()) throw IoError(fmt::format("read error after line {}", lineno));
    return result;
}

PendingParseResult parse_any(std::istream& in, const IngestOptions& opt, bool require_reads) {
    if (!in) throw IoError("input stream is not readable");
    return opt.format == InputFormat::Delimited ? parse_delimited(in, opt, require_reads)
                                                : parse_line_json(in, opt, require_reads);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    return in;
}

}  // namespace

std::vector<std::string> split_delimited(std::string_view line, char delimiter) {
    auto cells = try_split(line, delimiter);
    if (!cells) throw SchemaError("unterminated quote");
    return std::move(*cells);
}

std::string quote_delimited(std::string_view value, char delimiter) {
    const bool needs = value.find_first_of(std::string{delimiter, '"', '\n', '\r'}) !=
                           std::string_view::npos ||
                       (!value.empty() && (value.front() == ' ' || value.back() == ' '));
    if (!needs) return std::string(value);
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

ParseResult parse_records(std::istream& in, const IngestOptions& options) {
    auto pending = parse_any(in, options, true);
    ParseResult out;
    out.report = std::move(pending.report);
    out.records.reserve(pending.records.size());
    for (auto& p : pending.records) {
        out.records.push_back(PublicationRecord{std::move(p.id), std::move(p.field), p.year,
                                                *p.reads, p.cites});
    }
    return out;
}

ParseResult parse_records_file(const std::filesystem::path& path, const IngestOptions& options) {
    auto in = open_input(path);
    return parse_records(in, options);
}

PendingParseResult parse_pending(std::istream& in, const IngestOptions& options) {
    return parse_any(in, options, false);
}

PendingParseResult parse_pending_file(const std::filesystem::path& path,
                                      const IngestOptions& options) {
    auto in = open_input(path);
    return parse_pending(in, options);
}

IngestReport validate(std::span<const PublicationRecord> records, const YearRange& years) {
    IngestReport report;
    std::unordered_map<std::string_view, std::size_t> first_seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const std::size_t at = i + 1;
        bool bad = false;
        auto flag = [&](std::string reason) {
            report.diagnostics.push_back({at, std::move(reason)});
            bad = true;
        };
        if (!first_seen.try_emplace(r.id, at).second) flag(fmt::format("duplicate id {}", r.id));
        if (!years.contains(r.year)) flag("year out of range");
        if (r.reads < 0) flag("negative reads");
        if (r.cites && *r.cites < 0) flag("negative cites");
        if (bad) ++report.rejected;
        else ++report.accepted;
    }
    return report;
}

void write_records(std::ostream& out, std::span<const PublicationRecord> records,
                   InputFormat format, char delimiter) {
    if (format == InputFormat::LineJson) {
        for (const auto& r : records) {
            ordered_json j;
            j["id"] = r.id;
            j["field"] = r.field;
            j["year"] = r.year;
            j["reads"] = r.reads;
            j["cites"] = r.cites ? ordered_json(*r.cites) : ordered_json(nullptr);
            out << j.dump() << '\n';
        }
        return;
    }
    const char d = delimiter;
    out << "id" << d << "field" << d << "year" << d << "reads" << d << "cites\n";
    for (const auto& r : records) {
        out << quote_delimited(r.id, d) << d << quote_delimited(r.field, d) << d << r.year << d
            << r.reads << d;
        if (r.cites) out << *r.cites;
        out << '\n';
    }
}

void write_diagnostics(std::ostream& out, const IngestReport& report) {
    for (const auto& d : report.diagnostics) {
        ordered_json j;
        j["line"] = d.line;
        j["reason"] = d.reason;
        out << j.dump() << '\n';
    }
    for (const auto& n : report.notices) {
        ordered_json j;
        j["notice"] = n;
        out << j.dump() << '\n';
    }
    ordered_json summary;
    summary["accepted"] = report.accepted;
    summary["rejected"] = report.rejected;
    out << summary.dump() << '\n';
}

}  // namespace readscale
