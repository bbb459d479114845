#include "codetopics/summarizer.hpp"

#include "codetopics/parallel.hpp"

namespace codetopics::summarizer {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

SummaryRecord summarize_one(const codeprep::SanitizedFunction& fn, const LlmConfig& config,
                            const net::BaseUrl& base) {
    SummaryRecord rec;
    rec.id = fn.id;
    rec.model_name = config.model_name;
    const std::string body = chat_request(build_prompt(fn.code), config).dump();
    const auto res = net::post_json(base, "/chat/completions", body, config.api_key,
                                    config.request_timeout, config.retry_policy());
    if (!res.ok()) {
        rec.error = res.error + " after " + std::to_string(res.attempts) + " attempt(s)";
        return rec;
    }
    try {
        const auto reply = nlohmann::json::parse(res.body);
        const std::string content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        if (auto usage = reply.find("usage"); usage != reply.end() && usage->is_object()) {
            if (usage->contains("prompt_tokens")) rec.prompt_tokens = usage->at("prompt_tokens").get<int>();
            if (usage->contains("completion_tokens")) rec.completion_tokens = usage->at("completion_tokens").get<int>();
        }
        rec.summary = parse_description(content);
    } catch (const DescriptionParseError& e) {
        rec.error = std::string("parse error: ") + e.what();
    } catch (const nlohmann::json::exception& e) {
        rec.error = std::string("malformed response: ") + e.what();
    }
    if (!rec.ok()) rec.summary.clear();
    return rec;
}

}  // namespace

void LlmConfig::validate() const {
    if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
    if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
    if (retries < 0) throw std::invalid_argument("retries must be >= 0");
    if (request_timeout.count() <= 0) throw std::invalid_argument("request_timeout must be positive");
    if (model_name.empty()) throw std::invalid_argument("model_name must not be empty");
    net::parse_base_url(base_url);
}

std::string build_prompt(std::string_view code) {
    std::string prompt;
    prompt.reserve(kBaseQuery.size() + code.size() + kFormatInstruction.size());
    prompt += kBaseQuery;
    prompt += code;
    prompt += kFormatInstruction;
    return prompt;
}

std::string parse_description(std::string_view response_text) {
    const auto pos = response_text.rfind(kDescriptionMarker);
    if (pos == std::string_view::npos) {
        throw DescriptionParseError("response lacks the '##### Description:' marker");
    }
    const auto text = trim(response_text.substr(pos + kDescriptionMarker.size()));
    if (text.empty()) throw DescriptionParseError("empty description after marker");
    return std::string(text);
}

nlohmann::json chat_request(std::string_view prompt, const LlmConfig& config) {
    return {
        {"model", config.model_name},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
        {"max_tokens", config.max_tokens},
        {"temperature", config.temperature},
    };
}

std::vector<SummaryRecord> summarize(std::span<const codeprep::SanitizedFunction> batch,
                                     const LlmConfig& config) {
    config.validate();
    const auto base = net::parse_base_url(config.base_url);
    std::vector<SummaryRecord> results(batch.size());
    parallel_for(batch.size(), static_cast<std::size_t>(config.max_in_flight),
                 [&](std::size_t i) { results[i] = summarize_one(batch[i], config, base); });
    return results;
}

}  // namespace codetopics::summarizer
