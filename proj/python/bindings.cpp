#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "readscale/corpus.hpp"
#include "readscale/css.hpp"
#include "readscale/distfit.hpp"
#include "readscale/error.hpp"
#include "readscale/ingest.hpp"
#include "readscale/rescale.hpp"
#include "readscale/synth.hpp"
#include "readscale/topz.hpp"

namespace py = pybind11;
using namespace readscale;

namespace {

std::vector<PublicationRecord> to_records(const std::vector<PublicationRecord>& r) { return r; }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Readership distribution universality toolkit (C++ core)";

    py::register_exception<Error>(m, "Error", PyExc_ValueError);

    py::enum_<ZeroPolicy>(m, "ZeroPolicy")
        .value("EXCLUDE", ZeroPolicy::Exclude)
        .value("SHIFT_ONE", ZeroPolicy::ShiftOne);
    py::enum_<TruncationRule>(m, "TruncationRule")
        .value("AT_LEAST", TruncationRule::AtLeast)
        .value("ABOVE", TruncationRule::Above);
    py::enum_<TopVariant>(m, "TopVariant")
        .value("ORIGINAL", TopVariant::Original)
        .value("RESCALED", TopVariant::Rescaled);
    py::enum_<TieRule>(m, "TieRule").value("RANK", TieRule::Rank).value("THRESHOLD", TieRule::Threshold);
    py::enum_<Discretization>(m, "Discretization")
        .value("ROUND", Discretization::RoundHalfUp)
        .value("CEIL1", Discretization::CeilAtLeastOne)
        .value("NONE", Discretization::None);

    py::class_<PublicationRecord>(m, "PublicationRecord")
        .def(py::init([](std::string id, std::string field, int year, Count reads,
                         std::optional<Count> cites) {
                 return PublicationRecord{std::move(id), std::move(field), year, reads, cites};
             }),
             py::arg("id"), py::arg("field"), py::arg("year"), py::arg("reads"),
             py::arg("cites") = std::nullopt)
        .def_readwrite("id", &PublicationRecord::id)
        .def_readwrite("field", &PublicationRecord::field)
        .def_readwrite("year", &PublicationRecord::year)
        .def_readwrite("reads", &PublicationRecord::reads)
        .def_readwrite("cites", &PublicationRecord::cites)
        .def("__eq__", [](const PublicationRecord& a, const PublicationRecord& b) { return a == b; })
        .def("__repr__", [](const PublicationRecord& r) {
            return "PublicationRecord(" + r.id + ", " + r.field + ", " + std::to_string(r.year) +
                   ", " + std::to_string(r.reads) + ")";
        });

    py::class_<GroupStats>(m, "GroupStats")
        .def_readonly("n", &GroupStats::n)
        .def_readonly("r_mean", &GroupStats::r_mean)
        .def_readonly("r_max", &GroupStats::r_max)
        .def_readonly("zero_share", &GroupStats::zero_share);

    m.def("group_sizes", [](const std::vector<PublicationRecord>& records) {
        std::vector<std::tuple<std::string, int, std::size_t>> out;
        for (const auto& [key, g] : group_by_field_year(records))
            out.emplace_back(key.field, key.year, g.records.size());
        return out;
    }, "Partition records by (field, year); returns (field, year, n) triples.");
    m.def("count_stats", [](const std::vector<Count>& c) { return count_stats(c); });

    py::class_<LognormalFit>(m, "LognormalFit")
        .def_readonly("mu", &LognormalFit::mu)
        .def_readonly("sigma2", &LognormalFit::sigma2)
        .def_readonly("loglik", &LognormalFit::loglik)
        .def_readonly("n_used", &LognormalFit::n_used)
        .def_readonly("n_dropped", &LognormalFit::n_dropped)
        .def_readonly("se_mu", &LognormalFit::se_mu)
        .def_readonly("se_sigma2", &LognormalFit::se_sigma2);

    py::class_<SwTestResult>(m, "SwTestResult")
        .def_readonly("w", &SwTestResult::w)
        .def_readonly("p", &SwTestResult::p)
        .def_readonly("n", &SwTestResult::n)
        .def_readonly("reject", &SwTestResult::reject);

    m.def("fit_lognormal",
          [](const std::vector<double>& values, ZeroPolicy policy) {
              return fit_lognormal(std::span<const double>(values), policy);
          },
          py::arg("values"), py::arg("policy") = ZeroPolicy::Exclude);
    m.def("shapiro_wilk", [](const std::vector<double>& v) { return shapiro_wilk(v); });
    m.def("test_lognormality",
          [](const std::vector<double>& values, ZeroPolicy policy, double alpha, std::size_t mm) {
              return test_lognormality(std::span<const double>(values), policy, alpha, mm);
          },
          py::arg("values"), py::arg("policy") = ZeroPolicy::Exclude, py::arg("alpha") = 0.05,
          py::arg("m") = 1);

    m.def("rescale", [](const std::vector<Count>& counts) {
        return rescale_counts(GroupKey{}, counts).values;
    }, "Divide counts by their mean.");
    m.def("collapse", [](const std::vector<std::vector<Count>>& groups) {
        std::vector<RescaledSample> samples;
        for (std::size_t i = 0; i < groups.size(); ++i)
            samples.push_back(rescale_counts(GroupKey{std::to_string(i), 0}, groups[i]));
        return collapse(samples);
    }, "Rescale each group by its mean and concatenate.");
    m.def("ccdf", [](const std::vector<double>& values) {
        std::vector<std::pair<double, double>> out;
        for (const auto& p : ccdf(values).points) out.emplace_back(p.x, p.p);
        return out;
    }, "Complementary CDF as (x, P(X >= x)) pairs.");

    py::class_<CssResult>(m, "CssResult")
        .def_readonly("betas", &CssResult::betas)
        .def_readonly("class_counts", &CssResult::class_counts)
        .def_readonly("class_shares", &CssResult::class_shares)
        .def_readonly("labels", &CssResult::labels);
    m.def("characteristic_scores",
          [](const std::vector<double>& v, int k, TruncationRule rule) {
              return characteristic_scores(std::span<const double>(v), k, rule);
          },
          py::arg("values"), py::arg("k") = 3, py::arg("rule") = TruncationRule::AtLeast);
    m.def("classify", [](const std::vector<double>& v, const std::vector<double>& betas) {
        return classify(std::span<const double>(v), betas);
    });

    m.def("sigma_z", [](double z, const std::vector<std::size_t>& sizes) { return sigma_z(z, sizes); });

    py::class_<FieldShare>(m, "FieldShare")
        .def_readonly("field", &FieldShare::field)
        .def_readonly("n", &FieldShare::n)
        .def_readonly("selected", &FieldShare::selected)
        .def_readonly("share", &FieldShare::share)
        .def_readonly("within", &FieldShare::within);
    py::class_<TopZReport>(m, "TopZReport")
        .def_readonly("year", &TopZReport::year)
        .def_readonly("z", &TopZReport::z)
        .def_readonly("variant", &TopZReport::variant)
        .def_readonly("fields", &TopZReport::fields)
        .def_readonly("sigma_z", &TopZReport::sigma_z)
        .def_readonly("n_c", &TopZReport::n_c)
        .def_readonly("selected", &TopZReport::selected)
        .def_readonly("within_tolerance", &TopZReport::within_tolerance);
    m.def("top_share_report",
          [](const std::vector<PublicationRecord>& records, double z, TopVariant variant, TieRule tie) {
              return top_share_report(records, z, variant, tie);
          },
          py::arg("records"), py::arg("z"), py::arg("variant"), py::arg("tie_rule") = TieRule::Rank);

    m.def("lognormal_mean", &lognormal_mean);
    m.def("generate_corpus",
          [](const std::vector<std::tuple<std::string, std::size_t, double, double>>& fields, int year,
             std::uint64_t seed, Discretization disc, double zero_inflation) {
              SynthSpec spec;
              for (const auto& [label, n, mu, sigma2] : fields) spec.fields.push_back({label, n, mu, sigma2});
              spec.year = year;
              spec.seed = seed;
              spec.discretization = disc;
              spec.zero_inflation = zero_inflation;
              return generate_corpus(spec);
          },
          py::arg("fields"), py::arg("year"), py::arg("seed"),
          py::arg("discretization") = Discretization::RoundHalfUp, py::arg("zero_inflation") = 0.0,
          "fields: list of (label, n, mu, sigma2)");

    m.def("parse_records",
          [](const std::string& text, bool line_json, char delimiter) {
              std::istringstream in(text);
              auto res = parse_records(in, IngestOptions{line_json ? InputFormat::LineJson : InputFormat::Delimited,
                                                         delimiter, {}});
              std::vector<std::pair<std::size_t, std::string>> diags;
              for (const auto& d : res.report.diagnostics) diags.emplace_back(d.line, d.reason);
              return py::make_tuple(res.records, res.report.accepted, res.report.rejected, diags);
          },
          py::arg("text"), py::arg("line_json") = false, py::arg("delimiter") = ',',
          "Returns (records, accepted, rejected, [(line, reason)]).");
    m.def("format_records",
          [](const std::vector<PublicationRecord>& records, bool line_json, char delimiter) {
              std::ostringstream out;
              write_records(out, to_records(records), line_json ? InputFormat::LineJson : InputFormat::Delimited,
                            delimiter);
              return out.str();
          },
          py::arg("records"), py::arg("line_json") = false, py::arg("delimiter") = ',');
}
