#include "memtrade/http_util.hpp"

#include "memtrade/errors.hpp"

#include <httplib.h>

#include <chrono>
#include <thread>

namespace memtrade {

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint URL must include a scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

namespace {

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

} // namespace

std::string http_post_json(const std::string& url, const std::string& body,
                           const std::string& bearer_token, const HttpRetryOptions& retry) {
    const SplitUrl split = split_url(url);

    int delay_ms = retry.backoff_initial_ms;
    std::string last_error = "no attempt made";
    int last_status = 0;
    std::string last_body;

    for (int attempt = 0; attempt < retry.max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            delay_ms *= 2;
        }

        httplib::Client client(split.base);
        client.set_connection_timeout(retry.timeout_seconds, 0);
        client.set_read_timeout(retry.timeout_seconds, 0);
        httplib::Headers headers;
        if (!bearer_token.empty()) {
            headers.emplace("Authorization", "Bearer " + bearer_token);
        }

        auto result = client.Post(split.path, headers, body, "application/json");
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            last_status = 0;
            last_body.clear();
            continue;
        }
        if (result->status >= 200 && result->status < 300) {
            return result->body;
        }
        last_error = "HTTP " + std::to_string(result->status);
        last_status = result->status;
        last_body = result->body;
        if (!retryable_status(result->status)) {
            break;
        }
    }
    throw ProviderError("request to " + url + " failed after retries: " + last_error,
                        last_status, last_body);
}

} // namespace memtrade
