#include "codetopics/http_client.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include <httplib.h>

namespace codetopics::net {

BaseUrl parse_base_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        throw std::invalid_argument("base URL '" + std::string(url) + "' lacks a scheme");
    }
    const std::string_view scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw std::invalid_argument("unsupported URL scheme '" + std::string(scheme) + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    BaseUrl out;
    if (path_start == std::string_view::npos) {
        out.origin = std::string(url);
    } else {
        out.origin = std::string(url.substr(0, path_start));
        out.path_prefix = std::string(url.substr(path_start));
    }
    if (out.origin.size() == scheme_end + 3) {
        throw std::invalid_argument("base URL '" + std::string(url) + "' lacks a host");
    }
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    return out;
}

std::chrono::milliseconds RetryPolicy::delay_before_retry(int retry_index) const {
    const double scale = std::pow(backoff_factor, retry_index);
    return std::chrono::milliseconds(static_cast<long long>(std::llround(backoff_base.count() * scale)));
}

HttpResult post_json(const BaseUrl& base, std::string_view path, const std::string& body,
                     const std::string& api_key, std::chrono::milliseconds timeout,
                     const RetryPolicy& policy) {
    httplib::Client client(base.origin);
    const auto secs = timeout.count() / 1000;
    const auto usecs = (timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    const std::string target = base.path_prefix + std::string(path);

    HttpResult result;
    for (int attempt = 0; attempt <= policy.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(policy.delay_before_retry(attempt - 1));
        result.attempts = attempt + 1;
        auto res = client.Post(target, headers, body, "application/json");
        if (!res) {
            result.status = 0;
            result.error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        result.status = res->status;
        result.body = res->body;
        if (res->status >= 200 && res->status < 300) {
            result.error.clear();
            return result;
        }
        result.error = "HTTP " + std::to_string(res->status);
        if (res->status != 429 && res->status < 500) return result;
    }
    return result;
}

}  // namespace codetopics::net
