#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codetopics/codeprep.hpp"
#include "codetopics/http_client.hpp"

namespace codetopics::summarizer {

inline constexpr std::string_view kBaseQuery =
    "Consider the following source code and provide a description of its purpose.";
inline constexpr std::string_view kFormatInstruction =
    " The output should follow this format: ##### Description: <source code description>";
inline constexpr std::string_view kDescriptionMarker = "##### Description:";

struct LlmConfig {
    std::string base_url = "http://localhost:8000/v1";
    std::string model_name = "google/gemma-2-2b-it";
    std::string api_key;
    int max_tokens = 1024;
    double temperature = 0.0;
    std::chrono::milliseconds request_timeout{120'000};
    int max_in_flight = 4;
    int retries = 3;
    std::chrono::milliseconds backoff_base{1000};
    double backoff_factor = 2.0;

    // Throws std::invalid_argument.
    void validate() const;
    net::RetryPolicy retry_policy() const { return {retries, backoff_base, backoff_factor}; }
};

struct SummaryRecord {
    std::string id;
    std::string summary;
    std::string model_name;
    std::optional<int> prompt_tokens;
    std::optional<int> completion_tokens;
    std::string error;  // non-empty marks a failed record; summary is then empty

    bool ok() const { return error.empty(); }
};

class DescriptionParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string build_prompt(std::string_view code);

// Text after the last description marker, trimmed. Throws
// DescriptionParseError when the marker is missing or nothing follows it.
std::string parse_description(std::string_view response_text);

nlohmann::json chat_request(std::string_view prompt, const LlmConfig& config);

// One result per input in input order. HTTP failures (after retries) and
// unparseable responses become per-record errors.
std::vector<SummaryRecord> summarize(std::span<const codeprep::SanitizedFunction> batch,
                                     const LlmConfig& config);

}  // namespace codetopics::summarizer
