#pragma once
// In-process readership provider for fetch tests. Serves POST /lookup on a
// loopback port and records every request it sees.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace testsupport {

class StubProvider {
public:
    using Clock = std::chrono::steady_clock;

    struct Answer {
        std::optional<long long> readers;
        double match_probability = 1.0;
    };

    StubProvider() {
        server_.Post("/lookup", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex_);
            arrivals_.push_back(Clock::now());
            authorization_.push_back(req.get_header_value("Authorization"));
            if (failures_left_ > 0) {
                --failures_left_;
                res.status = fail_status_;
                return;
            }
            const auto body = nlohmann::json::parse(req.body, nullptr, false);
            nlohmann::json out = nlohmann::json::array();
            if (body.is_array()) {
                for (const auto& d : body) {
                    if (!d.is_string()) continue;
                    const auto it = answers_.find(d.get<std::string>());
                    if (it == answers_.end()) continue;
                    nlohmann::json item{{"doi", it->first},
                                        {"match_probability", it->second.match_probability}};
                    item["readers"] = it->second.readers ? nlohmann::json(*it->second.readers)
                                                         : nlohmann::json(nullptr);
                    out.push_back(item);
                }
            }
            res.set_content(out.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubProvider() {
        server_.stop();
        thread_.join();
    }

    StubProvider(const StubProvider&) = delete;
    StubProvider& operator=(const StubProvider&) = delete;

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    void answer(const std::string& doi, std::optional<long long> readers, double prob) {
        std::lock_guard lock(mutex_);
        answers_[doi] = {readers, prob};
    }

    // The next `times` requests fail with `status`.
    void fail_next(int times, int status) {
        std::lock_guard lock(mutex_);
        failures_left_ = times;
        fail_status_ = status;
    }

    std::size_t requests() const {
        std::lock_guard lock(mutex_);
        return arrivals_.size();
    }

    std::vector<Clock::time_point> arrivals() const {
        std::lock_guard lock(mutex_);
        return arrivals_;
    }

    std::vector<std::string> authorization() const {
        std::lock_guard lock(mutex_);
        return authorization_;
    }

    // Largest number of requests that arrived within any one-second window.
    std::size_t max_per_second() const {
        auto t = arrivals();
        std::sort(t.begin(), t.end());
        std::size_t best = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            std::size_t n = 0;
            for (std::size_t j = i; j < t.size(); ++j)
                if (t[j] - t[i] < std::chrono::seconds(1)) ++n;
            best = std::max(best, n);
        }
        return best;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    std::map<std::string, Answer> answers_;
    std::vector<Clock::time_point> arrivals_;
    std::vector<std::string> authorization_;
    int failures_left_ = 0;
    int fail_status_ = 503;
};

}  // namespace testsupport
