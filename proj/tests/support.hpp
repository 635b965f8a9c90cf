#pragma once
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "readscale/corpus.hpp"
#include "readscale/normal.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using readscale::Count;
using readscale::PublicationRecord;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = fs::temp_directory_path() / fmt::format("readscale-{}-{:x}", tag, rd());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

// Deterministic lognormal-looking counts with an exact total and maximum.
// The largest value equals `max`; all others lie in [1, max - 1].
inline std::vector<Count> shaped_counts(std::size_t n, Count total, Count max, double sigma = 1.0) {
    std::vector<Count> v(n);
    const double mean = static_cast<double>(total - max) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(n - 1);
        const double x = mean * std::exp(sigma * readscale::normal_quantile(q) - sigma * sigma / 2);
        v[i] = std::clamp<Count>(std::llround(x), 1, max - 1);
    }
    v[n - 1] = max;
    Count diff = total - std::accumulate(v.begin(), v.end(), Count{0});
    for (std::size_t i = 0; diff != 0; i = (i + 1) % (n - 1)) {
        const std::size_t j = n - 2 - i;  // start from the large end
        if (diff > 0 && v[j] < max - 1) {
            ++v[j];
            --diff;
        } else if (diff < 0 && v[j] > 1) {
            --v[j];
            ++diff;
        }
    }
    std::sort(v.begin(), v.end());
    return v;
}

inline std::vector<PublicationRecord> make_stratum(const std::string& field, int year,
                                                   const std::vector<Count>& reads,
                                                   const std::string& prefix) {
    std::vector<PublicationRecord> out;
    for (std::size_t i = 0; i < reads.size(); ++i)
        out.push_back({fmt::format("{}{:04}", prefix, i), field, year, reads[i], std::nullopt});
    return out;
}

// 85 reads, total 530, max 17: a strongly non-lognormal Mathematics-like stratum.
inline std::vector<Count> mathematics_reads() {
    const std::vector<std::pair<Count, int>> counts{{1, 3}, {2, 3},  {3, 4},  {4, 9},
                                                    {5, 15}, {6, 16}, {7, 14}, {8, 9},
                                                    {9, 6}, {10, 2}, {12, 2}, {17, 2}};
    std::vector<Count> out;
    for (auto [value, times] : counts) out.insert(out.end(), static_cast<std::size_t>(times), value);
    return out;
}

// 96 reads, total 2074, max 101: mean displays as 21.6.
inline std::vector<Count> surgery_reads() { return shaped_counts(96, 2074, 101); }

struct StratumSize {
    const char* field;
    std::size_t n;
    double r0;
};

// Stratum sizes and display means for one publication year (30 fields, 4933 records).
inline const std::vector<StratumSize>& year_2010_strata() {
    static const std::vector<StratumSize> rows{
        {"Biochemistry & molecular biology", 412, 29.6},
        {"Biotechnology & applied microbiology", 166, 27.6},
        {"Cell biology", 181, 44.7},
        {"Chemistry, analytical", 106, 24.5},
        {"Chemistry, multidisciplinary", 195, 35.9},
        {"Chemistry, physical", 399, 25.3},
        {"Clinical neurology", 99, 24.7},
        {"Economics", 175, 27.5},
        {"Energy & fuels", 113, 27.2},
        {"Engineering, chemical", 119, 19.9},
        {"Engineering, electrical & electronic", 103, 16.3},
        {"Environmental sciences", 200, 25.4},
        {"Food science & technology", 108, 16.5},
        {"Genetics & heredity", 159, 31.6},
        {"Immunology", 142, 28.8},
        {"Materials science, multidisciplinary", 343, 27.3},
        {"Mathematics", 85, 6.2},
        {"Mathematics, applied", 75, 8.7},
        {"Microbiology", 111, 23.7},
        {"Nanoscience & nanotechnology", 183, 32.8},
        {"Neurosciences", 190, 28.2},
        {"Oncology", 208, 34.5},
        {"Optics", 143, 19.6},
        {"Pharmacology & pharmacy", 134, 19.7},
        {"Physics, applied", 255, 19.2},
        {"Physics, condensed matter", 128, 23.7},
        {"Physics, multidisciplinary", 148, 30.8},
        {"Plant sciences", 64, 21.3},
        {"Public, environmental & occupational health", 93, 20.0},
        {"Surgery", 96, 21.6},
    };
    return rows;
}

// Deterministic 2010 corpus with the stratum sizes and means above.
inline std::vector<PublicationRecord> year_2010_corpus() {
    std::vector<PublicationRecord> out;
    std::size_t f = 0;
    for (const auto& s : year_2010_strata()) {
        const auto total = static_cast<Count>(std::llround(s.r0 * static_cast<double>(s.n)));
        const auto max = static_cast<Count>(std::llround(s.r0 * 5));
        auto part = make_stratum(s.field, 2010, shaped_counts(s.n, total, max),
                                 fmt::format("f{:02}-", f++));
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

}  // namespace testsupport
