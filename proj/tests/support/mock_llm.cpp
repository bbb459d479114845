#include "mock_llm.hpp"

#include <regex>
#include <set>
#include <stdexcept>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "codetopics/corpus.hpp"
#include "codetopics/embedder.hpp"
#include "codetopics/summarizer.hpp"

namespace testsupport {

namespace cs = codetopics::summarizer;

std::string describe_code(const std::string& prompt) {
    std::string code = prompt;
    if (code.rfind(cs::kBaseQuery, 0) == 0) code = code.substr(cs::kBaseQuery.size());
    if (const auto pos = code.rfind(cs::kFormatInstruction); pos != std::string::npos) code.resize(pos);
    static const std::set<std::string> skip = {"def", "return", "data", "obfq", "function", "self", "import",
                                               "for", "in", "if", "else", "none", "true", "false"};
    static const std::regex ident(R"([A-Za-z_][A-Za-z0-9_]*)");
    std::string words;
    for (auto it = std::sregex_iterator(code.begin(), code.end(), ident); it != std::sregex_iterator(); ++it) {
        for (const auto& part : codetopics::corpus::tokenize_identifier(it->str())) {
            if (skip.contains(part)) continue;
            words += (words.empty() ? "" : " ") + part;
        }
    }
    return "Sure, here is the description.\n##### Description: This function works with " + words + ".\n";
}

MockLlm::MockLlm() : MockLlm(Options{}) {}

MockLlm::MockLlm(Options options) : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    if (!options_.reply) options_.reply = describe_code;
    server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
        const int n = chat_requests_.fetch_add(1);
        if (n < options_.fail_first) {
            res.status = options_.fail_status;
            res.set_content(R"({"error":"injected"})", "application/json");
            return;
        }
        const auto body = nlohmann::json::parse(req.body);
        const auto prompt = body.at("messages").at(0).at("content").get<std::string>();
        const nlohmann::json reply = {
            {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", options_.reply(prompt)}}}}}},
            {"usage", {{"prompt_tokens", static_cast<int>(prompt.size() / 4)}, {"completion_tokens", 16}}}};
        res.set_content(reply.dump(), "application/json");
    });
    server_->Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
        embedding_requests_.fetch_add(1);
        const auto body = nlohmann::json::parse(req.body);
        auto data = nlohmann::json::array();
        const auto& input = body.at("input");
        // Answer in reverse order to exercise index-based reordering.
        for (std::size_t i = input.size(); i-- > 0;) {
            data.push_back({{"index", i},
                            {"embedding", codetopics::embedder::hash_embed(input[i].get<std::string>(),
                                                                           options_.embedding_dim, 7)}});
        }
        res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
    });
    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("mock server could not bind");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

MockLlm::~MockLlm() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockLlm::base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

}  // namespace testsupport
