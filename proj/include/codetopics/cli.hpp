#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codetopics/embedder.hpp"
#include "codetopics/evaluation.hpp"
#include "codetopics/summarizer.hpp"
#include "codetopics/topic_engine.hpp"

namespace codetopics::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kBadInput = 2, kMissingStage = 3 };

// Invalid configuration or input data.
class BadInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An upstream stage has not been run.
class MissingStage : public std::runtime_error {
public:
    MissingStage(const std::string& stage, const std::string& detail)
        : std::runtime_error("missing stage '" + stage + "': " + detail), stage_(stage) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct EmbeddingConfig {
    std::string provider = "hash";  // "hash" or "http"
    std::size_t dim = 256;
    std::uint64_t seed = 0;
    embedder::HttpEmbedderConfig http;
};

struct RunConfig {
    std::filesystem::path corpus;
    std::filesystem::path workdir = "work";
    std::optional<std::filesystem::path> stopwords;  // bundled list when unset
    std::uint64_t seed = 42;
    std::size_t train_n = 9500;
    std::size_t eval_n = 500;
    std::string placeholder = "obfq_function";
    summarizer::LlmConfig llm;
    EmbeddingConfig embedding;
    topics::FitParams fit;
    eval::CoherenceConfig coherence;
    eval::CompareOptions compare;

    void validate() const;
};

// Defaults overlaid with a JSON object (unknown keys are rejected).
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

// Hash of every setting that can change an artifact. Paths, endpoints and
// credentials are left out.
std::string config_hash(const RunConfig& c);

std::unique_ptr<embedder::EmbeddingProvider> make_provider(const RunConfig& c);

void cmd_prep(const RunConfig& c, std::ostream& log);
void cmd_summarize(const RunConfig& c, std::ostream& log);
// model: "doc", "summ" or "all".
void cmd_fit(const RunConfig& c, const std::string& model, std::ostream& log);
// representation: "summaries", "names" or "docstrings"; model: "doc" or "summ".
void cmd_infer(const RunConfig& c, const std::string& representation, const std::string& model, std::ostream& log);
void cmd_evaluate(const RunConfig& c, std::ostream& log);
void cmd_report(const RunConfig& c, std::ostream& log);

// Parses arguments (argv[0] included) and runs one subcommand. Messages go
// to out and err; the return value is an ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace codetopics::cli
