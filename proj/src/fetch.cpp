#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "readscale/fetch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <deque>
#include <set>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "readscale/error.hpp"

namespace readscale {
namespace {

using Clock = std::chrono::steady_clock;

// Issues at most ceil(rate) requests in any window of one second, spaced at
// least 1/rate apart. Slots are reserved under the lock and waited for outside it.
class RateLimiter {
public:
    explicit RateLimiter(double rate)
        : interval_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / rate))),
          cap_(static_cast<std::size_t>(std::ceil(rate))) {}

    void acquire() {
        Clock::time_point slot;
        {
            std::lock_guard lock(mutex_);
            slot = Clock::now();
            if (!issued_.empty()) slot = std::max(slot, issued_.back() + interval_);
            while (!issued_.empty() && issued_.front() + kWindow <= slot) issued_.pop_front();
            if (issued_.size() >= cap_) {
                slot = std::max(slot, issued_.front() + kWindow);
                issued_.pop_front();
            }
            issued_.push_back(slot);
        }
        std::this_thread::sleep_until(slot);
    }

private:
    // A little over one second so that receipt-time jitter cannot squeeze an
    // extra request into a server-side one-second window.
    static constexpr auto kWindow = std::chrono::milliseconds(1050);

    Clock::duration interval_;
    std::size_t cap_;
    std::deque<Clock::time_point> issued_;
    std::mutex mutex_;
};

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // prefix + /lookup
};

Endpoint split_url(const std::string& base) {
    const auto scheme = base.find("://");
    if (scheme == std::string::npos)
        throw ParameterError(fmt::format("provider url '{}' lacks a scheme", base));
    const auto slash = base.find('/', scheme + 3);
    Endpoint ep;
    ep.origin = base.substr(0, slash);
    std::string prefix = slash == std::string::npos ? "" : base.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    ep.path = prefix + "/lookup";
    return ep;
}

std::optional<CacheEntry> entry_from_json(const nlohmann::json& j, const std::string& stamp) {
    if (!j.is_object() || !j.contains("doi") || !j["doi"].is_string()) return std::nullopt;
    CacheEntry e;
    e.doi = j["doi"].get<std::string>();
    const auto prob = j.find("match_probability");
    if (prob == j.end() || !prob->is_number()) return std::nullopt;
    e.match_probability = prob->get<double>();
    if (!(e.match_probability >= 0.0 && e.match_probability <= 1.0)) return std::nullopt;
    const auto readers = j.find("readers");
    if (readers != j.end() && !readers->is_null()) {
        if (!readers->is_number_integer() || readers->get<Count>() < 0) return std::nullopt;
        e.readers = readers->get<Count>();
    }
    e.fetched_at = stamp;
    return e;
}

nlohmann::json entry_to_json(const CacheEntry& e) {
    nlohmann::ordered_json j;
    j["doi"] = e.doi;
    j["readers"] = e.readers ? nlohmann::ordered_json(*e.readers) : nlohmann::ordered_json(nullptr);
    j["match_probability"] = e.match_probability;
    j["fetched_at"] = e.fetched_at;
    return j;
}

}  // namespace

void validate(const ProviderConfig& c) {
    if (c.base_url.empty()) throw ParameterError("provider base_url is empty");
    if (!(c.rate_limit > 0.0)) throw ParameterError("rate_limit must be > 0");
    if (c.batch_size < 1) throw ParameterError("batch_size must be >= 1");
    if (c.max_retries < 0) throw ParameterError("max_retries must be >= 0");
    if (c.concurrency < 1) throw ParameterError("concurrency must be >= 1");
    if (!(c.min_match_probability >= 0.0 && c.min_match_probability <= 1.0))
        throw ParameterError("min_match_probability must lie in [0, 1]");
}

ProviderConfig parse_provider_config(std::istream& in) {
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw SchemaError("provider config must be a JSON object");
    ProviderConfig c;
    c.base_url = j.value("base_url", c.base_url);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.rate_limit = j.value("rate_limit", c.rate_limit);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.min_match_probability = j.value("min_match_probability", c.min_match_probability);
    c.concurrency = j.value("concurrency", c.concurrency);
    c.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", c.initial_backoff.count()));
    c.max_backoff = std::chrono::milliseconds(j.value("max_backoff_ms", c.max_backoff.count()));
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", c.timeout.count()));
    return c;
}

std::string utc_timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const auto secs = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900, tm.tm_mon + 1,
                       tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
}

Cache::Cache(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) {
        std::ifstream in(path_);
        if (!in) throw IoError(fmt::format("cannot read cache '{}'", path_.string()));
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line, nullptr, false);
            std::optional<CacheEntry> e;
            if (!j.is_discarded() && j.contains("fetched_at") && j["fetched_at"].is_string())
                e = entry_from_json(j, j["fetched_at"].get<std::string>());
            if (!e) {
                warnings_.push_back(fmt::format("{}:{}: skipped malformed cache line", path_.string(), lineno));
                continue;
            }
            auto it = latest_.find(e->doi);
            if (it == latest_.end()) latest_.emplace(e->doi, std::move(*e));
            else if (e->fetched_at >= it->second.fetched_at) it->second = std::move(*e);
        }
    }
    writer_.open(path_, std::ios::app);
    if (!writer_) throw IoError(fmt::format("cannot open cache '{}' for appending", path_.string()));
}

std::optional<CacheEntry> Cache::lookup(const std::string& doi) const {
    std::lock_guard lock(mutex_);
    const auto it = latest_.find(doi);
    if (it == latest_.end()) return std::nullopt;
    return it->second;
}

void Cache::append(const CacheEntry& entry) {
    std::lock_guard lock(mutex_);
    writer_ << entry_to_json(entry).dump() << '\n';
    writer_.flush();
    if (!writer_) throw IoError(fmt::format("write to cache '{}' failed", path_.string()));
    auto it = latest_.find(entry.doi);
    if (it == latest_.end()) latest_.emplace(entry.doi, entry);
    else if (entry.fetched_at >= it->second.fetched_at) it->second = entry;
}

std::size_t Cache::size() const {
    std::lock_guard lock(mutex_);
    return latest_.size();
}

FetchResult filter_entry(const CacheEntry& entry, double min_match_probability) {
    FetchResult r;
    r.doi = entry.doi;
    r.match_probability = entry.match_probability;
    r.fetched_at = entry.fetched_at;
    if (entry.match_probability > min_match_probability) r.reads = entry.readers;
    return r;
}

std::optional<FetchResult> cache_lookup(const std::string& doi, const Cache& cache,
                                        double min_match_probability) {
    auto e = cache.lookup(doi);
    if (!e) return std::nullopt;
    return filter_entry(*e, min_match_probability);
}

FetchOutcome fetch_counts(std::span<const std::string> dois, const ProviderConfig& config,
                          Cache& cache) {
    validate(config);
    const auto endpoint = split_url(config.base_url);

    FetchOutcome outcome;
    std::unordered_map<std::string, FetchResult> resolved;
    std::vector<std::string> pending;
    std::set<std::string> queued;
    for (const auto& doi : dois) {
        if (resolved.count(doi) || queued.count(doi)) continue;
        if (auto hit = cache_lookup(doi, cache, config.min_match_probability)) {
            ++outcome.stats.cache_hits;
            resolved.emplace(doi, std::move(*hit));
        } else {
            queued.insert(doi);
            pending.push_back(doi);
        }
    }

    std::vector<std::vector<std::string>> batches;
    for (std::size_t i = 0; i < pending.size(); i += config.batch_size) {
        const auto end = std::min(pending.size(), i + config.batch_size);
        batches.emplace_back(pending.begin() + static_cast<std::ptrdiff_t>(i),
                             pending.begin() + static_cast<std::ptrdiff_t>(end));
    }

    std::string api_key;
    if (const char* key = std::getenv(config.api_key_env.c_str())) api_key = key;

    RateLimiter limiter(config.rate_limit);
    std::atomic<std::size_t> next_batch{0};
    std::atomic<std::size_t> requests{0};
    std::atomic<bool> fatal{false};
    std::string fatal_reason;
    std::mutex result_mutex;

    auto worker = [&] {
        httplib::Client client(endpoint.origin);
        const auto t = config.timeout;
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(t).count(),
                                      (t.count() % 1000) * 1000);
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(t).count(),
                                (t.count() % 1000) * 1000);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

        for (;;) {
            if (fatal) return;
            const std::size_t b = next_batch++;
            if (b >= batches.size()) return;
            const auto& batch = batches[b];
            const std::string body = nlohmann::json(batch).dump();

            std::string last_error;
            bool network_failure = false;
            std::optional<nlohmann::json> answer;
            auto backoff = config.initial_backoff;
            for (int attempt = 0; attempt <= config.max_retries && !fatal; ++attempt) {
                if (attempt > 0) {
                    std::this_thread::sleep_for(backoff);
                    backoff = std::min(backoff * 2, config.max_backoff);
                }
                limiter.acquire();
                ++requests;
                auto res = client.Post(endpoint.path, headers, body, "application/json");
                if (!res) {
                    network_failure = true;
                    last_error = fmt::format("network error: {}", httplib::to_string(res.error()));
                    continue;
                }
                network_failure = false;
                if (res->status < 200 || res->status >= 300) {
                    last_error = fmt::format("HTTP {}", res->status);
                    continue;
                }
                auto parsed = nlohmann::json::parse(res->body, nullptr, false);
                if (parsed.is_discarded() || !parsed.is_array()) {
                    last_error = "malformed provider response";
                    continue;
                }
                answer = std::move(parsed);
                break;
            }

            if (!answer) {
                if (network_failure) {
                    std::lock_guard lock(result_mutex);
                    if (!fatal.exchange(true)) fatal_reason = last_error;
                    return;
                }
                std::lock_guard lock(result_mutex);
                for (const auto& doi : batch) {
                    FetchResult r;
                    r.doi = doi;
                    r.fetched_at = utc_timestamp_now();
                    r.error = last_error;
                    resolved.emplace(doi, std::move(r));
                }
                continue;
            }

            const auto stamp = utc_timestamp_now();
            std::unordered_map<std::string, CacheEntry> got;
            for (const auto& item : *answer) {
                if (auto e = entry_from_json(item, stamp)) got.emplace(e->doi, std::move(*e));
            }
            for (const auto& doi : batch) {
                CacheEntry e;
                if (auto it = got.find(doi); it != got.end()) {
                    e = std::move(it->second);
                } else {
                    // Not returned by the provider: a miss with zero match probability.
                    e.doi = doi;
                    e.fetched_at = stamp;
                }
                cache.append(e);
                std::lock_guard lock(result_mutex);
                resolved.emplace(doi, filter_entry(e, config.min_match_probability));
            }
        }
    };

    const std::size_t workers = std::min(config.concurrency, batches.size());
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    outcome.stats.requests = requests;
    if (fatal)
        throw FetchError(fmt::format("provider unreachable after {} retries: {}", config.max_retries,
                                     fatal_reason));

    outcome.results.reserve(dois.size());
    for (const auto& doi : dois) {
        const auto& r = resolved.at(doi);
        if (r.error) ++outcome.stats.failures;
        outcome.results.push_back(r);
    }
    return outcome;
}

}  // namespace readscale
