#include "readscale/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "readscale/error.hpp"
#include "readscale/synth.hpp"

namespace readscale {
namespace {

using ordered_json = nlohmann::ordered_json;

Cell text(std::string s) {
    std::replace(s.begin(), s.end(), '\t', ' ');
    std::replace(s.begin(), s.end(), '\n', ' ');
    ordered_json v = s;
    return {std::move(s), std::move(v)};
}

Cell num(double v, int precision) {
    if (!std::isfinite(v)) return {"NA", nullptr};
    return {fmt::format("{:.{}f}", v, precision), v};
}

Cell integer(long long v) { return {fmt::format("{}", v), v}; }
Cell boolean(bool b) { return {b ? "1" : "0", b}; }
Cell na() { return {"NA", nullptr}; }

template <class T, class F>
Cell maybe(const std::optional<T>& o, F f) {
    return o ? f(*o) : na();
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    return out;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError(fmt::format("output directory '{}' is not usable", dir.string()));
}

std::string join_errors(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
    return out;
}

std::string z_label(double z) { return fmt::format("{}", z); }

std::vector<int> target_years(std::span<const PublicationRecord> records) {
    return years_of(records);
}

// Groups of a corpus bucketed by year, in GroupKey order.
std::map<int, std::vector<const Group*>> groups_by_year(const GroupMap& groups) {
    std::map<int, std::vector<const Group*>> out;
    for (const auto& [key, g] : groups) out[key.year].push_back(&g);
    return out;
}

std::vector<double> as_doubles(std::span<const Count> c) { return {c.begin(), c.end()}; }

}  // namespace

void validate(const RunConfig& config) {
    for (double z : config.z) {
        if (!(z > 0.0 && z < 100.0))
            throw ParameterError(fmt::format("z must lie in (0, 100), got {}", z));
    }
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
        throw ParameterError(fmt::format("alpha must lie in (0, 1), got {}", config.alpha));
    if (config.m && *config.m < 1) throw ParameterError("m must be >= 1");
    if (config.k < 1) throw ParameterError("k must be >= 1");
}

void write_table(const Table& table, const std::filesystem::path& dir) {
    ensure_dir(dir);
    auto tsv = open_output(dir / (table.name + ".tsv"));
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        tsv << (i ? "\t" : "") << table.columns[i];
    tsv << '\n';
    auto jsonl = open_output(dir / (table.name + ".jsonl"));
    for (const auto& row : table.rows) {
        ordered_json j;
        for (std::size_t i = 0; i < row.size(); ++i) {
            tsv << (i ? "\t" : "") << row[i].text;
            j[table.columns[i]] = row[i].value;
        }
        tsv << '\n';
        jsonl << j.dump() << '\n';
    }
    if (!tsv || !jsonl) throw IoError(fmt::format("failed writing table '{}'", table.name));
}

std::string class_label(std::size_t index) {
    static const char* labels[] = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X"};
    return index >= 1 && index <= 10 ? labels[index - 1] : fmt::format("{}", index);
}

std::filesystem::path corpus_path(const RunConfig& config) {
    if (config.format == InputFormat::LineJson) return config.out_dir / "corpus.jsonl";
    return config.out_dir / (config.delimiter == ',' ? "corpus.csv" : "corpus.tsv");
}

LoadedCorpus load_corpus(const RunConfig& config) {
    if (config.inputs.empty()) throw ParameterError("no --input given");
    LoadedCorpus out;
    const IngestOptions options{config.format, config.delimiter, config.year_range};
    for (const auto& path : config.inputs) {
        auto parsed = parse_records_file(path, options);
        const bool tag = config.inputs.size() > 1;
        for (auto& d : parsed.report.diagnostics) {
            if (tag) d.reason = path.filename().string() + ": " + d.reason;
            out.report.diagnostics.push_back(std::move(d));
        }
        for (auto& n : parsed.report.notices) out.report.notices.push_back(std::move(n));
        out.report.accepted += parsed.report.accepted;
        out.report.rejected += parsed.report.rejected;
        std::move(parsed.records.begin(), parsed.records.end(), std::back_inserter(out.records));
    }
    if (config.diagnostics) {
        auto f = open_output(*config.diagnostics);
        write_diagnostics(f, out.report);
    }
    return out;
}

std::vector<PublicationRecord> select_records(std::span<const PublicationRecord> records,
                                              const RunConfig& config) {
    std::vector<PublicationRecord> out;
    const std::set<int> years(config.years.begin(), config.years.end());
    for (const auto& r : records) {
        if (!years.empty() && !years.count(r.year)) continue;
        if (config.count == CountField::Cites) {
            if (!r.cites) continue;
            auto copy = r;
            copy.reads = *r.cites;
            out.push_back(std::move(copy));
        } else {
            out.push_back(r);
        }
    }
    if (out.empty()) throw EmptyInputError("no records left after year/count selection");
    return out;
}

// ---------------------------------------------------------------------------
// fit

FitTable run_fit(std::span<const PublicationRecord> records, const RunConfig& config) {
    validate(config);
    const auto groups = group_by_field_year(records);
    FitTable table;
    std::size_t tests_run = 0;
    for (const auto& [key, group] : groups) {
        FitRow row;
        row.key = key;
        row.obs = group.records.size();
        std::vector<std::string> errors;
        const auto reads = group.reads();
        row.stats = count_stats(reads);
        try {
            row.sw = test_lognormality(std::span<const Count>(reads), config.zero_policy,
                                       config.alpha, 1);
            ++tests_run;
        } catch (const Error& e) {
            errors.push_back(fmt::format("sw: {}", e.what()));
        }
        try {
            row.fit = fit_lognormal(std::span<const Count>(reads), config.zero_policy);
        } catch (const Error& e) {
            errors.push_back(fmt::format("fit: {}", e.what()));
        }
        try {
            const auto rescaled = rescale_counts(key, reads);
            row.fit_rescaled = fit_lognormal(std::span<const double>(rescaled.values), config.zero_policy);
        } catch (const Error& e) {
            errors.push_back(fmt::format("rescaled fit: {}", e.what()));
        }
        row.error = join_errors(errors);
        table.rows.push_back(std::move(row));
    }
    table.m = config.m.value_or(std::max<std::size_t>(tests_run, 1));
    for (auto& row : table.rows) {
        if (row.sw) row.sw = apply_bonferroni(*row.sw, config.alpha, table.m);
    }
    return table;
}

Table fit_table(const FitTable& fit) {
    Table t;
    t.name = "fit";
    t.columns = {"field", "year", "obs", "r0", "r_max", "zero_share", "sw_w", "sw_p", "sw_reject",
                 "m", "mu", "se_mu", "z_mu", "sigma2", "se_sigma2", "z_sigma2", "loglik",
                 "n_used", "n_dropped", "mu_rescaled", "sigma2_rescaled", "loglik_rescaled",
                 "error"};
    for (const auto& r : fit.rows) {
        const auto& f = r.fit;
        t.rows.push_back({
            text(r.key.field), integer(r.key.year), integer(static_cast<long long>(r.obs)),
            maybe(r.stats, [](const GroupStats& s) { return num(s.r_mean, 1); }),
            maybe(r.stats, [](const GroupStats& s) { return integer(s.r_max); }),
            maybe(r.stats, [](const GroupStats& s) { return num(s.zero_share, 3); }),
            maybe(r.sw, [](const SwTestResult& s) { return num(s.w, 3); }),
            maybe(r.sw, [](const SwTestResult& s) { return num(s.p, 3); }),
            maybe(r.sw, [](const SwTestResult& s) { return boolean(s.reject); }),
            integer(static_cast<long long>(fit.m)),
            maybe(f, [](const LognormalFit& x) { return num(x.mu, 3); }),
            maybe(f, [](const LognormalFit& x) { return num(x.se_mu, 3); }),
            maybe(f, [](const LognormalFit& x) { return num(x.mu / x.se_mu, 2); }),
            maybe(f, [](const LognormalFit& x) { return num(x.sigma2, 3); }),
            maybe(f, [](const LognormalFit& x) { return num(x.se_sigma2, 3); }),
            maybe(f, [](const LognormalFit& x) { return num(x.sigma2 / x.se_sigma2, 2); }),
            maybe(f, [](const LognormalFit& x) { return num(x.loglik, 1); }),
            maybe(f, [](const LognormalFit& x) { return integer(static_cast<long long>(x.n_used)); }),
            maybe(f, [](const LognormalFit& x) { return integer(static_cast<long long>(x.n_dropped)); }),
            maybe(r.fit_rescaled, [](const LognormalFit& x) { return num(x.mu, 3); }),
            maybe(r.fit_rescaled, [](const LognormalFit& x) { return num(x.sigma2, 3); }),
            maybe(r.fit_rescaled, [](const LognormalFit& x) { return num(x.loglik, 1); }),
            r.error.empty() ? na() : text(r.error),
        });
    }
    return t;
}

// ---------------------------------------------------------------------------
// collapse

std::vector<CollapseYear> run_collapse(std::span<const PublicationRecord> records,
                                       const RunConfig& config) {
    validate(config);
    const auto groups = group_by_field_year(records);
    std::vector<CollapseYear> out;
    std::size_t tests_run = 0;
    for (const auto& [year, members] : groups_by_year(groups)) {
        CollapseYear cy;
        cy.row.year = year;
        std::vector<RescaledSample> samples;
        for (const Group* g : members) {
            const auto reads = g->reads();
            const auto raw = as_doubles(reads);
            try {
                samples.push_back(rescale_group(*g));
                cy.strata.push_back({g->key, ccdf(raw), ccdf(samples.back().values)});
            } catch (const AllUnreadGroupError&) {
                cy.row.excluded.push_back(g->key.field);
            }
        }
        cy.row.strata = samples.size();
        if (samples.empty()) {
            cy.row.error = "no stratum could be rescaled";
            out.push_back(std::move(cy));
            continue;
        }
        cy.merged = collapse(samples);
        cy.row.obs = cy.merged.size();
        std::vector<std::string> errors;
        try {
            cy.row.fit = fit_lognormal(std::span<const double>(cy.merged), config.zero_policy);
        } catch (const Error& e) {
            errors.push_back(fmt::format("fit: {}", e.what()));
        }
        try {
            cy.row.sw = test_lognormality(std::span<const double>(cy.merged), config.zero_policy,
                                          config.alpha, 1);
            ++tests_run;
        } catch (const UnsupportedSizeError&) {
            // Pooled samples above the test's size range are reported without SW.
        } catch (const Error& e) {
            errors.push_back(fmt::format("sw: {}", e.what()));
        }
        cy.row.error = join_errors(errors);
        out.push_back(std::move(cy));
    }
    const std::size_t m = std::max<std::size_t>(tests_run, 1);
    for (auto& cy : out) {
        if (cy.row.sw) cy.row.sw = apply_bonferroni(*cy.row.sw, config.alpha, m);
    }
    return out;
}

Table collapse_table(std::span<const CollapseYear> years) {
    Table t;
    t.name = "collapse";
    t.columns = {"year", "obs", "strata", "mu", "se_mu", "sigma2", "se_sigma2", "loglik",
                 "n_used", "n_dropped", "sw_w", "sw_p", "sw_reject", "excluded", "error"};
    for (const auto& cy : years) {
        const auto& r = cy.row;
        const auto& f = r.fit;
        std::string excluded;
        for (const auto& e : r.excluded) excluded += (excluded.empty() ? "" : "|") + e;
        t.rows.push_back({
            integer(r.year), integer(static_cast<long long>(r.obs)),
            integer(static_cast<long long>(r.strata)),
            maybe(f, [](const LognormalFit& x) { return num(x.mu, 3); }),
            maybe(f, [](const LognormalFit& x) { return num(x.se_mu, 3); }),
            maybe(f, [](const LognormalFit& x) { return num(x.sigma2, 3); }),
            maybe(f, [](const LognormalFit& x) { return num(x.se_sigma2, 3); }),
            maybe(f, [](const LognormalFit& x) { return num(x.loglik, 1); }),
            maybe(f, [](const LognormalFit& x) { return integer(static_cast<long long>(x.n_used)); }),
            maybe(f, [](const LognormalFit& x) { return integer(static_cast<long long>(x.n_dropped)); }),
            maybe(r.sw, [](const SwTestResult& s) { return num(s.w, 3); }),
            maybe(r.sw, [](const SwTestResult& s) { return num(s.p, 3); }),
            maybe(r.sw, [](const SwTestResult& s) { return boolean(s.reject); }),
            excluded.empty() ? na() : text(excluded),
            r.error.empty() ? na() : text(r.error),
        });
    }
    return t;
}

std::vector<std::string> write_ccdf_files(std::span<const CollapseYear> years,
                                          const std::filesystem::path& dir) {
    ensure_dir(dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const CcdfCurve& curve) {
        auto out = open_output(dir / name);
        write_ccdf_tsv(out, curve);
        written.push_back(name);
    };
    for (const auto& cy : years) {
        std::set<std::string> used;
        for (const auto& s : cy.strata) {
            auto slug = file_slug(s.key.field);
            for (int i = 2; used.count(slug); ++i) slug = fmt::format("{}_{}", file_slug(s.key.field), i);
            used.insert(slug);
            emit(fmt::format("ccdf_{}_{}.tsv", slug, cy.row.year), s.rescaled);
            emit(fmt::format("ccdf_raw_{}_{}.tsv", slug, cy.row.year), s.original);
        }
        if (!cy.merged.empty()) emit(fmt::format("ccdf_merged_{}.tsv", cy.row.year), ccdf(cy.merged));
    }
    return written;
}

// ---------------------------------------------------------------------------
// css

CssRun run_css(std::span<const PublicationRecord> records, const RunConfig& config) {
    validate(config);
    const auto groups = group_by_field_year(records);
    CssRun run;
    run.k = config.k;
    for (const auto& [year, members] : groups_by_year(groups)) {
        std::vector<double> pooled;
        for (const Group* g : members) {
            for (const auto& r : g->records) pooled.push_back(static_cast<double>(r.reads));
        }
        CssYear cy;
        cy.year = year;
        try {
            cy.result = css(pooled, config.k, config.css_rule);
        } catch (const Error& e) {
            cy.error = e.what();
        }
        run.overall.push_back(std::move(cy));
    }
    for (const auto& [key, g] : groups) {
        CssStratum s;
        s.key = key;
        s.n = g.records.size();
        try {
            const auto values = as_doubles(g.reads());
            s.result = css(values, config.k, config.css_rule);
            if (static_cast<int>(s.result->betas.size()) < config.k)
                s.error = fmt::format("degenerate: {} of {} scores", s.result->betas.size(), config.k);
        } catch (const Error& e) {
            s.error = e.what();
        }
        run.strata.push_back(std::move(s));
    }
    return run;
}

Table css_overall_table(const CssRun& run) {
    Table t;
    t.name = "css_overall";
    t.columns = {"year", "class", "lower", "upper", "threshold", "obs", "share", "error"};
    for (const auto& cy : run.overall) {
        if (!cy.error.empty()) {
            t.rows.push_back({integer(cy.year), na(), na(), na(), na(), na(), na(), text(cy.error)});
            continue;
        }
        const auto& res = cy.result;
        for (std::size_t c = 0; c < res.classes(); ++c) {
            const double lower = c == 0 ? 0.0 : res.betas[c - 1];
            const bool last = c + 1 == res.classes();
            const std::string threshold =
                last ? fmt::format(">= {:.1f}", lower)
                     : fmt::format("[{:.1f},{:.1f})", lower, res.betas[c]);
            t.rows.push_back({integer(cy.year), text(class_label(c + 1)), num(lower, 1),
                              last ? na() : num(res.betas[c], 1), text(threshold),
                              integer(static_cast<long long>(res.class_counts[c])),
                              num(100.0 * res.class_shares[c], 1), na()});
        }
    }
    return t;
}

Table css_strata_table(const CssRun& run) {
    Table t;
    t.name = "css_strata";
    t.columns = {"field", "year", "n"};
    for (int j = 1; j <= run.k; ++j) t.columns.push_back(fmt::format("beta_{}", j));
    for (int c = 1; c <= run.k + 1; ++c) t.columns.push_back(fmt::format("share_{}", class_label(static_cast<std::size_t>(c))));
    t.columns.push_back("error");
    for (const auto& s : run.strata) {
        std::vector<Cell> row{text(s.key.field), integer(s.key.year), integer(static_cast<long long>(s.n))};
        for (int j = 0; j < run.k; ++j) {
            const auto idx = static_cast<std::size_t>(j);
            row.push_back(s.result && idx < s.result->betas.size() ? num(s.result->betas[idx], 2) : na());
        }
        for (int c = 0; c <= run.k; ++c) {
            const auto idx = static_cast<std::size_t>(c);
            row.push_back(s.result && idx < s.result->class_shares.size()
                              ? num(100.0 * s.result->class_shares[idx], 1)
                              : na());
        }
        row.push_back(s.error.empty() ? na() : text(s.error));
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// topz

TopzRun run_topz(std::span<const PublicationRecord> records, const RunConfig& config) {
    validate(config);
    if (auto dups = duplicate_ids(records); !dups.empty()) throw DuplicateIdError(std::move(dups));
    TopzRun run;
    for (int year : target_years(records)) {
        const auto of_year = records_of_year(records, year);
        for (double z : config.z) {
            for (auto variant : {TopVariant::Original, TopVariant::Rescaled}) {
                try {
                    run.reports.push_back(top_share_report(of_year, z, variant, config.tie_rule));
                } catch (const ParameterError& e) {
                    run.errors.push_back(fmt::format("{} z={} {}: {}", year, z_label(z),
                                                     to_string(variant), e.what()));
                }
            }
        }
    }
    return run;
}

Table topz_summary_table(const TopzRun& run) {
    Table t;
    t.name = "topz_summary";
    t.columns = {"year", "z", "n_c", "sigma_z", "selected", "original_within", "rescaled_within"};
    std::map<std::pair<int, double>, std::pair<const TopZReport*, const TopZReport*>> pairs;
    for (const auto& r : run.reports) {
        auto& p = pairs[{r.year, r.z}];
        (r.variant == TopVariant::Original ? p.first : p.second) = &r;
    }
    for (const auto& [key, p] : pairs) {
        const TopZReport* any = p.first ? p.first : p.second;
        t.rows.push_back({integer(key.first), num(key.second, 1),
                          integer(static_cast<long long>(any->n_c)), num(any->sigma_z, 3),
                          integer(static_cast<long long>(any->selected)),
                          p.first ? integer(static_cast<long long>(p.first->within_tolerance)) : na(),
                          p.second ? integer(static_cast<long long>(p.second->within_tolerance)) : na()});
    }
    return t;
}

Table topz_field_table(const TopZReport& report) {
    Table t;
    t.name = fmt::format("topz_{}_z{}_{}", report.year, z_label(report.z), to_string(report.variant));
    t.columns = {"field", "n_i", "selected", "share", "z", "sigma_z", "lower", "upper", "within"};
    for (const auto& f : report.fields) {
        t.rows.push_back({text(f.field), integer(static_cast<long long>(f.n)),
                          integer(static_cast<long long>(f.selected)), num(f.share, 2),
                          num(report.z, 1), num(report.sigma_z, 3),
                          num(report.z - report.sigma_z, 3), num(report.z + report.sigma_z, 3),
                          boolean(f.within)});
    }
    return t;
}

// ---------------------------------------------------------------------------
// commands

namespace {

std::vector<PublicationRecord> analysis_records(const RunConfig& config) {
    validate(config);
    auto loaded = load_corpus(config);
    return select_records(loaded.records, config);
}

std::size_t do_fit(std::span<const PublicationRecord> records, const RunConfig& config) {
    const auto fit = run_fit(records, config);
    write_table(fit_table(fit), config.out_dir);
    return static_cast<std::size_t>(std::count_if(fit.rows.begin(), fit.rows.end(),
                                                  [](const FitRow& r) { return !r.error.empty(); }));
}

std::size_t do_collapse(std::span<const PublicationRecord> records, const RunConfig& config) {
    const auto years = run_collapse(records, config);
    write_table(collapse_table(years), config.out_dir);
    write_ccdf_files(years, config.out_dir);
    return static_cast<std::size_t>(std::count_if(years.begin(), years.end(), [](const CollapseYear& y) {
        return !y.row.error.empty();
    }));
}

std::size_t do_css(std::span<const PublicationRecord> records, const RunConfig& config) {
    const auto run = run_css(records, config);
    write_table(css_overall_table(run), config.out_dir);
    write_table(css_strata_table(run), config.out_dir);
    std::size_t errors = 0;
    for (const auto& y : run.overall) errors += !y.error.empty();
    for (const auto& s : run.strata) errors += !s.error.empty();
    return errors;
}

std::size_t do_topz(std::span<const PublicationRecord> records, const RunConfig& config) {
    const auto run = run_topz(records, config);
    write_table(topz_summary_table(run), config.out_dir);
    for (const auto& r : run.reports) write_table(topz_field_table(r), config.out_dir);
    return run.errors.size();
}

}  // namespace

std::size_t cmd_fit(const RunConfig& config) { return do_fit(analysis_records(config), config); }
std::size_t cmd_collapse(const RunConfig& config) { return do_collapse(analysis_records(config), config); }
std::size_t cmd_css(const RunConfig& config) { return do_css(analysis_records(config), config); }
std::size_t cmd_topz(const RunConfig& config) { return do_topz(analysis_records(config), config); }

std::size_t cmd_report(const RunConfig& config) {
    const auto records = analysis_records(config);
    return do_fit(records, config) + do_collapse(records, config) + do_css(records, config) +
           do_topz(records, config);
}

IngestReport cmd_ingest(const RunConfig& config) {
    auto quiet = config;
    quiet.diagnostics.reset();
    auto loaded = load_corpus(quiet);
    const auto checked = validate(loaded.records, config.year_range);
    std::set<std::size_t> flagged;
    for (const auto& d : checked.diagnostics) flagged.insert(d.line);

    std::vector<PublicationRecord> clean;
    for (std::size_t i = 0; i < loaded.records.size(); ++i) {
        if (!flagged.count(i + 1)) clean.push_back(loaded.records[i]);
    }
    IngestReport report = loaded.report;
    for (const auto& d : checked.diagnostics)
        report.diagnostics.push_back({d.line, fmt::format("record {}: {}", d.line, d.reason)});
    report.accepted = checked.accepted;
    report.rejected += checked.rejected;

    ensure_dir(config.out_dir);
    auto out = open_output(corpus_path(config));
    write_records(out, clean, config.format, config.delimiter);
    if (config.diagnostics) {
        auto f = open_output(*config.diagnostics);
        write_diagnostics(f, report);
    }
    return report;
}

std::vector<PublicationRecord> cmd_synth(const RunConfig& config,
                                         const std::filesystem::path& spec_path) {
    std::ifstream in(spec_path);
    if (!in) throw IoError(fmt::format("cannot open spec '{}'", spec_path.string()));
    auto specs = parse_synth_specs(in);
    if (config.seed) {
        for (std::size_t i = 0; i < specs.size(); ++i) specs[i].seed = *config.seed + i;
    }
    std::vector<PublicationRecord> records;
    ordered_json meta;
    meta["generator"] = kGeneratorName;
    meta["specs"] = ordered_json::array();
    for (const auto& spec : specs) {
        auto part = generate_corpus(spec);
        std::move(part.begin(), part.end(), std::back_inserter(records));
        meta["specs"].push_back(ordered_json::parse(synth_spec_json(spec)));
    }
    if (auto dups = duplicate_ids(records); !dups.empty()) throw DuplicateIdError(std::move(dups));

    ensure_dir(config.out_dir);
    auto out = open_output(corpus_path(config));
    write_records(out, records, config.format, config.delimiter);
    auto meta_out = open_output(config.out_dir / "corpus.meta.json");
    meta_out << meta.dump(2) << '\n';
    return records;
}

FetchSummary cmd_fetch(const RunConfig& config, const ProviderConfig& provider,
                       const std::filesystem::path& cache_path) {
    if (config.inputs.empty()) throw ParameterError("no --input given");
    const IngestOptions options{config.format, config.delimiter, config.year_range};
    std::vector<PendingRecord> pending;
    IngestReport report;
    for (const auto& path : config.inputs) {
        auto parsed = parse_pending_file(path, options);
        std::move(parsed.records.begin(), parsed.records.end(), std::back_inserter(pending));
        report.accepted += parsed.report.accepted;
        report.rejected += parsed.report.rejected;
        for (auto& d : parsed.report.diagnostics) report.diagnostics.push_back(std::move(d));
    }

    std::vector<std::string> dois;
    for (const auto& p : pending) {
        if (!p.reads) dois.push_back(p.id);
    }

    FetchSummary summary;
    Cache cache(cache_path);
    summary.warnings = cache.warnings();
    const auto outcome = fetch_counts(dois, provider, cache);
    summary.stats = outcome.stats;

    std::map<std::string, const FetchResult*> by_doi;
    for (const auto& r : outcome.results) by_doi.emplace(r.doi, &r);

    std::vector<PublicationRecord> merged;
    for (const auto& p : pending) {
        std::optional<Count> reads = p.reads;
        if (!reads) {
            const auto it = by_doi.find(p.id);
            if (it != by_doi.end() && it->second->reads) {
                reads = it->second->reads;
                ++summary.merged;
            }
        }
        if (!reads) {
            ++summary.excluded;
            continue;
        }
        merged.push_back(PublicationRecord{p.id, p.field, p.year, *reads, p.cites});
    }
    if (!dois.empty() && summary.merged == 0)
        summary.warnings.push_back(fmt::format(
            "no counts merged: every provider match was at or below probability {}",
            provider.min_match_probability));
    if (summary.stats.failures > 0)
        summary.warnings.push_back(fmt::format("{} DOI lookups failed", summary.stats.failures));

    ensure_dir(config.out_dir);
    auto out = open_output(corpus_path(config));
    write_records(out, merged, config.format, config.delimiter);
    auto results = open_output(config.out_dir / "fetch_results.jsonl");
    for (const auto& r : outcome.results) {
        ordered_json j;
        j["doi"] = r.doi;
        j["reads"] = r.reads ? ordered_json(*r.reads) : ordered_json(nullptr);
        j["match_probability"] = r.match_probability;
        j["fetched_at"] = r.fetched_at;
        j["error"] = r.error ? ordered_json(*r.error) : ordered_json(nullptr);
        results << j.dump() << '\n';
    }
    if (config.diagnostics) {
        auto f = open_output(*config.diagnostics);
        write_diagnostics(f, report);
    }
    return summary;
}

}  // namespace readscale
