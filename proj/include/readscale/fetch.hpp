#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "readscale/corpus.hpp"

namespace readscale {

/// Readership provider endpoint settings. The API key itself is read from the
/// environment variable named by `api_key_env`, never stored here.
struct ProviderConfig {
    std::string base_url;
    std::string api_key_env = "READSCALE_API_KEY";
    std::size_t batch_size = 50;
    double rate_limit = 5.0;  // requests per second
    int max_retries = 3;
    double min_match_probability = 0.90;
    std::size_t concurrency = 4;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::milliseconds max_backoff{8000};
    std::chrono::milliseconds timeout{10000};
};

void validate(const ProviderConfig& config);

/// Reads a JSON object; unknown keys are ignored, absent keys keep defaults.
ProviderConfig parse_provider_config(std::istream& in);

/// `reads` is present only when match_probability > the configured minimum.
/// `error` marks a per-DOI failure (such entries are never cached).
struct FetchResult {
    std::string doi;
    std::optional<Count> reads;
    double match_probability = 0.0;
    std::string fetched_at;  // ISO-8601 UTC, millisecond precision
    std::optional<std::string> error;
};

/// Raw provider answer as stored in the cache, before the match filter.
struct CacheEntry {
    std::string doi;
    std::optional<Count> readers;
    double match_probability = 0.0;
    std::string fetched_at;
};

/// Append-only line-JSON cache. The most recent entry per DOI wins (ties go
/// to the later line). Corrupt lines are skipped and counted as warnings.
class Cache {
public:
    explicit Cache(std::filesystem::path path);

    std::optional<CacheEntry> lookup(const std::string& doi) const;
    void append(const CacheEntry& entry);

    std::size_t size() const;
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::map<std::string, CacheEntry, std::less<>> latest_;
    std::vector<std::string> warnings_;
    std::ofstream writer_;
    mutable std::mutex mutex_;
};

FetchResult filter_entry(const CacheEntry& entry, double min_match_probability);

/// Latest cached answer for `doi`, filtered at `min_match_probability`.
std::optional<FetchResult> cache_lookup(const std::string& doi, const Cache& cache,
                                        double min_match_probability = 0.90);

struct FetchStats {
    std::size_t cache_hits = 0;
    std::size_t requests = 0;  // HTTP attempts, retries included
    std::size_t failures = 0;  // DOIs ending with a per-DOI error
};

struct FetchOutcome {
    std::vector<FetchResult> results;  // input order
    FetchStats stats;
};

/// Resolves DOIs to reader counts: cache first, then batched POSTs to
/// {base_url}/lookup. HTTP errors that persist after retries become per-DOI
/// failures; an unreachable provider raises FetchError once retries are
/// exhausted, leaving everything fetched so far in the cache.
FetchOutcome fetch_counts(std::span<const std::string> dois, const ProviderConfig& config,
                          Cache& cache);

std::string utc_timestamp_now();

}  // namespace readscale
