#pragma once

#include <string>

namespace memtrade {

struct HttpRetryOptions {
    int max_attempts = 3;        // total attempts, not retries-after-first
    int backoff_initial_ms = 250; // doubled after every failed attempt
    int timeout_seconds = 30;
};

// Splits "http://host:port/some/path" into the client base and the path.
struct SplitUrl {
    std::string base; // scheme://host[:port]
    std::string path; // leading '/' path, "/" when absent
};
SplitUrl split_url(const std::string& url);

// POSTs a JSON body, retrying transport failures and retryable statuses
// (408/429/5xx) with exponential backoff. Returns the response body on 2xx;
// throws ProviderError with status and body otherwise.
std::string http_post_json(const std::string& url, const std::string& body,
                           const std::string& bearer_token, const HttpRetryOptions& retry);

} // namespace memtrade
