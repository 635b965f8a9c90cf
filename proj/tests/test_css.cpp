#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles/css_oracle.hpp"
#include "readscale/css.hpp"
#include "readscale/error.hpp"

using namespace readscale;

namespace {

bool matches_oracle(const std::vector<std::int64_t>& sample, int k, TruncationRule rule) {
    const auto want = oracle::brute_css(sample, k, rule == TruncationRule::Above);
    const std::vector<Count> reads(sample.begin(), sample.end());
    const auto betas = characteristic_scores(std::span<const Count>(reads), k, rule);
    if (betas.size() != want.betas.size()) return false;
    for (std::size_t i = 0; i < betas.size(); ++i)
        if (betas[i] != want.betas[i].value()) return false;
    const auto got = classify(std::span<const Count>(reads), betas);
    return got.class_counts == want.counts && got.labels == want.labels;
}

// Calls fn on every non-decreasing sequence of length n over [0, hi].
template <class Fn>
void each_multiset(std::size_t n, std::int64_t hi, Fn&& fn) {
    std::vector<std::int64_t> v(n, 0);
    while (true) {
        fn(v);
        std::size_t i = n;
        while (i > 0 && v[i - 1] == hi) --i;
        if (i == 0) return;
        const auto next = v[i - 1] + 1;
        for (std::size_t j = i - 1; j < n; ++j) v[j] = next;
    }
}

}  // namespace

TEST_CASE("hand example") {
    const std::vector<double> v{1, 2, 3, 4, 10};
    const auto r = css(v, 3);
    CHECK(r.betas == std::vector<double>{4, 7, 10});
    CHECK(r.class_counts == std::vector<std::size_t>{3, 1, 0, 1});
    CHECK(r.class_shares == std::vector<double>{0.6, 0.2, 0.0, 0.2});
    CHECK(r.labels == std::vector<std::size_t>{0, 0, 0, 1, 3});
    CHECK(r.classes() == 4);
}

TEST_CASE("constant sample stops after one score") {
    CHECK(characteristic_scores(std::vector<double>{5, 5, 5}, 3) == std::vector<double>{5});
    const auto r = css(std::vector<double>{5, 5, 5}, 3);
    CHECK(r.class_counts == std::vector<std::size_t>{0, 3});
}

TEST_CASE("class boundaries are half-open") {
    const std::vector<double> v{0, 27, 28, 68, 69, 133, 134};
    const std::vector<double> b{28, 69, 134};
    const auto r = classify(v, b);
    CHECK(r.labels == std::vector<std::size_t>{0, 0, 1, 1, 2, 2, 3});
    CHECK(r.class_counts == std::vector<std::size_t>{2, 2, 2, 1});
}

TEST_CASE("everything below the first score") {
    const std::vector<double> b{10, 20, 30};
    const auto r = classify(std::vector<double>{1, 2, 3}, b);
    CHECK(r.class_shares == std::vector<double>{1, 0, 0, 0});
}

TEST_CASE("strict truncation") {
    const std::vector<double> v{1, 2, 3, 4, 10};
    // mean 4; values > 4 are {10}; then nothing above 10.
    CHECK(characteristic_scores(v, 3, TruncationRule::Above) == std::vector<double>{4, 10});
    CHECK(parse_truncation_rule("gt") == TruncationRule::Above);
    CHECK_THROWS_AS(parse_truncation_rule("gte"), ParameterError);
}

TEST_CASE("argument checks") {
    CHECK_THROWS_AS(characteristic_scores(std::vector<double>{}, 3), EmptyInputError);
    CHECK_THROWS_AS(characteristic_scores(std::vector<double>{1, 2}, 0), ParameterError);
    const std::vector<double> bad{3, 3};
    CHECK_THROWS_AS(classify(std::vector<double>{1}, bad), ParameterError);
}

TEST_CASE("exhaustive small multisets agree with the brute-force oracle") {
    std::size_t checked = 0, failed = 0;
    for (std::size_t n = 1; n <= 8; ++n) {
        each_multiset(n, 10, [&](const std::vector<std::int64_t>& v) {
            for (auto rule : {TruncationRule::AtLeast, TruncationRule::Above}) {
                ++checked;
                if (!matches_oracle(v, 3, rule)) ++failed;
            }
        });
    }
    CHECK(checked > 100000);
    CHECK(failed == 0);
}

TEST_CASE("random ordered samples agree with the brute-force oracle") {
    std::mt19937_64 rng(20240517);
    std::uniform_int_distribution<int> len(1, 8), val(0, 10), depth(1, 5);
    std::size_t failed = 0;
    for (int t = 0; t < 100000; ++t) {
        std::vector<std::int64_t> v(static_cast<std::size_t>(len(rng)));
        for (auto& x : v) x = val(rng);
        if (!matches_oracle(v, depth(rng), t % 2 ? TruncationRule::Above : TruncationRule::AtLeast))
            ++failed;
    }
    CHECK(failed == 0);
}
