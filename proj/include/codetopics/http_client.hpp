#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>

namespace codetopics::net {

// "http://host:8000/v1" -> origin "http://host:8000", path_prefix "/v1".
struct BaseUrl {
    std::string origin;
    std::string path_prefix;
};

BaseUrl parse_base_url(std::string_view url);

struct RetryPolicy {
    int retries = 3;  // attempts = retries + 1
    std::chrono::milliseconds backoff_base{1000};
    double backoff_factor = 2.0;

    std::chrono::milliseconds delay_before_retry(int retry_index) const;
};

struct HttpResult {
    int status = 0;
    std::string body;
    std::string error;  // empty on success
    int attempts = 0;

    bool ok() const { return error.empty(); }
};

// POSTs a JSON body to origin + path_prefix + path. Transport failures,
// HTTP 429 and 5xx responses are retried with exponential backoff; other
// non-2xx statuses fail immediately.
HttpResult post_json(const BaseUrl& base, std::string_view path, const std::string& body,
                     const std::string& api_key, std::chrono::milliseconds timeout,
                     const RetryPolicy& policy);

}  // namespace codetopics::net
