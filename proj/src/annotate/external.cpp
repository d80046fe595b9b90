#include <algorithm>
#include <atomic>
#include <thread>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "gwm/annotate.hpp"

namespace gwm::annotate {
namespace {

bool transient_status(int status) { return status >= 500; }

}  // namespace

ExternalResult ExternalAnnotator::observe_facts(const std::string& clip_id,
                                                const std::string& frames_ref) const {
    nlohmann::ordered_json req;
    req["clip_id"] = clip_id;
    req["frames_ref"] = frames_ref;
    req["schema_version"] = k_facts_schema_version;
    const std::string body = req.dump();

    ExternalResult out;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        httplib::Client client(cfg_.host, cfg_.port);
        client.set_connection_timeout(0, cfg_.timeout_ms * 1000);
        client.set_read_timeout(0, cfg_.timeout_ms * 1000);

        auto res = client.Post(cfg_.path, body, "application/json");
        if (!res) {
            out.error = "transport: " + httplib::to_string(res.error());
            continue;  // transient: retry
        }
        out.raw_response = res->body;
        if (res->status != 200) {
            out.error = "status " + std::to_string(res->status);
            if (transient_status(res->status)) continue;
            return out;  // permanent http failure
        }
        try {
            out.facts = facts_from_json(res->body);
        } catch (const std::exception& e) {
            out.error = e.what();  // schema violation: never retried
            return out;
        }
        out.ok = true;
        out.error.clear();
        return out;
    }
    return out;  // retries exhausted
}

std::vector<ExternalResult> ExternalAnnotator::observe_many(
    const std::vector<std::pair<std::string, std::string>>& clips) const {
    std::vector<ExternalResult> results(clips.size());
    const int workers =
        int(std::min<size_t>(size_t(std::max(1, cfg_.max_in_flight)), clips.size()));
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < clips.size(); i = next.fetch_add(1))
                results[i] = observe_facts(clips[i].first, clips[i].second);
        });
    }
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace gwm::annotate
