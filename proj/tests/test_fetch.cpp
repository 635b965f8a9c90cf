#include "stub_provider.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>

#include "readscale/error.hpp"
#include "readscale/fetch.hpp"
#include "readscale/ingest.hpp"
#include "readscale/pipeline.hpp"
#include "support.hpp"

using namespace readscale;
using testsupport::StubProvider;
using testsupport::TempDir;

namespace {

ProviderConfig quick(const std::string& url) {
    ProviderConfig c;
    c.base_url = url;
    c.rate_limit = 50;
    c.initial_backoff = std::chrono::milliseconds(5);
    c.max_backoff = std::chrono::milliseconds(20);
    c.timeout = std::chrono::milliseconds(2000);
    return c;
}

}  // namespace

TEST_CASE("provider config parsing") {
    std::istringstream in(R"({"base_url": "http://x", "rate_limit": 2.5, "batch_size": 10,
                              "initial_backoff_ms": 100, "api_key_env": "K", "other": 1})");
    const auto c = parse_provider_config(in);
    CHECK(c.base_url == "http://x");
    CHECK(c.rate_limit == 2.5);
    CHECK(c.batch_size == 10);
    CHECK(c.initial_backoff == std::chrono::milliseconds(100));
    CHECK(c.api_key_env == "K");
    CHECK(c.min_match_probability == 0.90);
    std::istringstream bad("[1]");
    CHECK_THROWS_AS(parse_provider_config(bad), SchemaError);
    ProviderConfig z;
    z.base_url = "http://x";
    z.rate_limit = 0;
    CHECK_THROWS_AS(validate(z), ParameterError);
}

TEST_CASE("match probability filter") {
    const CacheEntry hi{"10.1/a", 31, 0.95, "2024-01-01T00:00:00.000Z"};
    const CacheEntry lo{"10.1/b", 12, 0.80, "2024-01-01T00:00:00.000Z"};
    const CacheEntry edge{"10.1/c", 5, 0.90, "2024-01-01T00:00:00.000Z"};
    CHECK(filter_entry(hi, 0.9).reads == 31);
    CHECK_FALSE(filter_entry(lo, 0.9).reads);
    CHECK_FALSE(filter_entry(edge, 0.9).reads);
    CHECK(filter_entry(lo, 0.9).match_probability == 0.80);
}

TEST_CASE("cache recency and resilience") {
    TempDir dir("cache");
    const auto path = dir / "cache.jsonl";
    {
        Cache empty(path);
        CHECK_FALSE(cache_lookup("10.1/x", empty));
    }
    std::string text;
    for (int i = 0; i < 9; ++i) {
        if (i == 4) text += "{\"doi\": \"10.1/broken\", \n";
        text += fmt::format(R"({{"doi":"10.1/{}","readers":{},"match_probability":0.99,"fetched_at":"2024-01-0{}T00:00:00.000Z"}})",
                            i, i, i + 1) + "\n";
    }
    text += R"({"doi":"10.1/0","readers":77,"match_probability":0.99,"fetched_at":"2025-01-01T00:00:00.000Z"})" "\n";
    text += R"({"doi":"10.1/1","readers":55,"match_probability":0.99,"fetched_at":"2023-01-01T00:00:00.000Z"})" "\n";
    testsupport::spit(path, text);
    Cache cache(path);
    CHECK(cache.size() == 9);
    CHECK(cache.warnings().size() == 1);
    CHECK(cache_lookup("10.1/0", cache)->reads == 77);
    CHECK(cache_lookup("10.1/1", cache)->reads == 1);
    CHECK(cache_lookup("10.1/8", cache)->reads == 8);
    CHECK_FALSE(cache_lookup("10.1/broken", cache));
}

TEST_CASE("fetch applies the filter and warm cache avoids the network") {
    StubProvider stub;
    stub.answer("10.1/a", 31, 0.95);
    stub.answer("10.1/b", 12, 0.80);
    stub.answer("10.1/c", 7, 0.91);
    TempDir dir("fetch");
    setenv("READSCALE_TEST_KEY", "sekret", 1);
    auto config = quick(stub.url());
    config.api_key_env = "READSCALE_TEST_KEY";
    config.batch_size = 2;
    const std::vector<std::string> dois{"10.1/a", "10.1/b", "10.1/c", "10.1/missing"};
    {
        Cache cache(dir / "c.jsonl");
        const auto out = fetch_counts(dois, config, cache);
        REQUIRE(out.results.size() == 4);
        CHECK(out.results[0].reads == 31);
        CHECK_FALSE(out.results[1].reads);
        CHECK(out.results[1].match_probability == 0.80);
        CHECK(out.results[2].reads == 7);
        CHECK_FALSE(out.results[3].reads);
        CHECK_FALSE(out.results[3].error);
        CHECK(out.stats.requests == 2);
        CHECK(out.stats.cache_hits == 0);
        CHECK(out.results[0].fetched_at.size() == 24);
    }
    CHECK(stub.requests() == 2);
    for (const auto& a : stub.authorization()) CHECK(a == "Bearer sekret");
    {
        Cache cache(dir / "c.jsonl");
        const auto again = fetch_counts(dois, config, cache);
        CHECK(again.stats.requests == 0);
        CHECK(again.stats.cache_hits == 4);
        CHECK(again.results[0].reads == 31);
        CHECK_FALSE(again.results[1].reads);
    }
    CHECK(stub.requests() == 2);
    unsetenv("READSCALE_TEST_KEY");
}

TEST_CASE("request rate stays under the limit") {
    StubProvider stub;
    std::vector<std::string> dois;
    for (int i = 0; i < 14; ++i) {
        dois.push_back(fmt::format("10.9/{}", i));
        stub.answer(dois.back(), i, 0.99);
    }
    TempDir dir("rate");
    auto config = quick(stub.url());
    config.rate_limit = 5;
    config.batch_size = 1;
    config.concurrency = 4;
    Cache cache(dir / "c.jsonl");
    const auto out = fetch_counts(dois, config, cache);
    CHECK(out.stats.requests == 14);
    CHECK(stub.max_per_second() <= 5);
}

TEST_CASE("transient errors are retried") {
    StubProvider stub;
    stub.answer("10.1/a", 3, 0.99);
    stub.fail_next(2, 503);
    TempDir dir("retry");
    Cache cache(dir / "c.jsonl");
    const std::vector<std::string> dois{"10.1/a"};
    const auto out = fetch_counts(dois, quick(stub.url()), cache);
    CHECK(out.results[0].reads == 3);
    CHECK(out.stats.requests == 3);
}

TEST_CASE("persistent HTTP errors become per-DOI failures") {
    StubProvider stub;
    stub.fail_next(100, 404);
    TempDir dir("http");
    Cache cache(dir / "c.jsonl");
    auto config = quick(stub.url());
    config.max_retries = 1;
    const std::vector<std::string> dois{"10.1/a", "10.1/b"};
    const auto out = fetch_counts(dois, config, cache);
    CHECK(out.stats.failures == 2);
    CHECK(out.results[0].error == "HTTP 404");
    CHECK(cache.size() == 0);
}

TEST_CASE("an unreachable provider is fatal and leaves the cache alone") {
    TempDir dir("down");
    const auto path = dir / "c.jsonl";
    const std::string before =
        R"({"doi":"10.1/a","readers":4,"match_probability":0.99,"fetched_at":"2024-01-01T00:00:00.000Z"})" "\n";
    testsupport::spit(path, before);
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    auto config = quick(fmt::format("http://127.0.0.1:{}", port));
    config.max_retries = 2;
    {
        Cache cache(path);
        const std::vector<std::string> dois{"10.1/a", "10.1/b"};
        CHECK_THROWS_AS(fetch_counts(dois, config, cache), FetchError);
    }
    CHECK(testsupport::slurp(path) == before);
}

TEST_CASE("fetch merges counts into a corpus") {
    StubProvider stub;
    stub.answer("10.1/a", 31, 0.95);
    stub.answer("10.1/b", 12, 0.80);
    TempDir dir("merge");
    testsupport::spit(dir / "in.csv",
                      "id,field,year,reads\n10.1/a,Optics,2012,\n10.1/b,Optics,2012,\n10.1/c,Optics,2012,5\n");
    RunConfig rc;
    rc.inputs = {dir / "in.csv"};
    rc.out_dir = dir / "out";
    const auto s = cmd_fetch(rc, quick(stub.url()), dir / "cache.jsonl");
    CHECK(s.merged == 1);
    CHECK(s.excluded == 1);
    const auto corpus = parse_records_file(corpus_path(rc));
    REQUIRE(corpus.records.size() == 2);
    CHECK(corpus.records[0] == PublicationRecord{"10.1/a", "Optics", 2012, 31, {}});
    CHECK(corpus.records[1].reads == 5);
    CHECK(testsupport::lines_of(testsupport::slurp(rc.out_dir / "fetch_results.jsonl")).size() == 2);
}

TEST_CASE("fetch with only low-probability matches merges nothing and warns") {
    StubProvider stub;
    stub.answer("10.1/a", 31, 0.85);
    stub.answer("10.1/b", 12, 0.90);
    TempDir dir("low");
    testsupport::spit(dir / "in.csv", "id,field,year,reads\n10.1/a,Optics,2012,\n10.1/b,Optics,2012,\n");
    RunConfig rc;
    rc.inputs = {dir / "in.csv"};
    rc.out_dir = dir / "out";
    const auto s = cmd_fetch(rc, quick(stub.url()), dir / "cache.jsonl");
    CHECK(s.merged == 0);
    REQUIRE_FALSE(s.warnings.empty());
    CHECK(s.warnings.back().find("no counts merged") != std::string::npos);
    CHECK(parse_records_file(corpus_path(rc)).records.empty());
}
