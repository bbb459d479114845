#include "codetopics/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "codetopics/corpus.hpp"
#include "codetopics/rng.hpp"
#include "codetopics/text_io.hpp"

namespace codetopics::cli {

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& section) {
    if (!j.is_object()) throw BadInput("config: '" + section + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) throw BadInput("config: unknown key '" + key + "' in " + section);
    }
}

std::chrono::milliseconds ms(const nlohmann::json& j, const char* key, std::chrono::milliseconds fallback) {
    return std::chrono::milliseconds(j.value(key, static_cast<long long>(fallback.count())));
}

eval::Pairing pairing_from(const std::string& s) {
    if (s == "rank") return eval::Pairing::rank;
    if (s == "all_pairs") return eval::Pairing::all_pairs;
    throw BadInput("config: pairing must be 'rank' or 'all_pairs', got '" + s + "'");
}

const char* pairing_name(eval::Pairing p) { return p == eval::Pairing::rank ? "rank" : "all_pairs"; }

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

RunConfig read_config_file(const std::string& path) {
    if (path.empty()) return {};
    if (!std::filesystem::exists(path)) throw BadInput("config file not found: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw BadInput("config file " + path + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace

void RunConfig::validate() const {
    if (workdir.empty()) throw BadInput("workdir must be set");
    if (!codeprep::is_identifier(placeholder)) throw BadInput("placeholder '" + placeholder + "' is not an identifier");
    if (embedding.provider != "hash" && embedding.provider != "http") {
        throw BadInput("embedding provider must be 'hash' or 'http', got '" + embedding.provider + "'");
    }
    if (embedding.dim < 2) throw BadInput("embedding dim must be >= 2");
    try {
        llm.validate();
        fit.validate();
        coherence.validate();
    } catch (const std::invalid_argument& e) {
        throw BadInput(e.what());
    }
    if (compare.top_k < 1 || compare.cap_k < 1) throw BadInput("compare top_k and cap_k must be >= 1");
}

RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        check_keys(j, {"corpus", "workdir", "stopwords", "seed", "split", "placeholder", "llm", "embedding", "fit",
                       "coherence", "compare"},
                   "top level");
        if (j.contains("corpus")) c.corpus = j["corpus"].get<std::string>();
        if (j.contains("workdir")) c.workdir = j["workdir"].get<std::string>();
        if (j.contains("stopwords") && !j["stopwords"].is_null()) c.stopwords = j["stopwords"].get<std::string>();
        c.seed = j.value("seed", c.seed);
        c.placeholder = j.value("placeholder", c.placeholder);
        if (j.contains("split")) {
            const auto& s = j["split"];
            check_keys(s, {"train", "eval"}, "split");
            c.train_n = s.value("train", c.train_n);
            c.eval_n = s.value("eval", c.eval_n);
        }
        if (j.contains("llm")) {
            const auto& s = j["llm"];
            check_keys(s, {"base_url", "model_name", "max_tokens", "temperature", "timeout_ms", "max_in_flight",
                           "retries", "backoff_base_ms", "backoff_factor"},
                       "llm");
            auto& l = c.llm;
            l.base_url = s.value("base_url", l.base_url);
            l.model_name = s.value("model_name", l.model_name);
            l.max_tokens = s.value("max_tokens", l.max_tokens);
            l.temperature = s.value("temperature", l.temperature);
            l.request_timeout = ms(s, "timeout_ms", l.request_timeout);
            l.max_in_flight = s.value("max_in_flight", l.max_in_flight);
            l.retries = s.value("retries", l.retries);
            l.backoff_base = ms(s, "backoff_base_ms", l.backoff_base);
            l.backoff_factor = s.value("backoff_factor", l.backoff_factor);
        }
        if (j.contains("embedding")) {
            const auto& s = j["embedding"];
            check_keys(s, {"provider", "dim", "seed", "base_url", "model", "timeout_ms", "retries", "backoff_base_ms",
                           "backoff_factor", "batch_size", "max_in_flight"},
                       "embedding");
            auto& e = c.embedding;
            e.provider = s.value("provider", e.provider);
            e.dim = s.value("dim", e.dim);
            e.seed = s.value("seed", e.seed);
            e.http.base_url = s.value("base_url", e.http.base_url);
            e.http.model = s.value("model", e.http.model);
            e.http.request_timeout = ms(s, "timeout_ms", e.http.request_timeout);
            e.http.retries = s.value("retries", e.http.retries);
            e.http.backoff_base = ms(s, "backoff_base_ms", e.http.backoff_base);
            e.http.backoff_factor = s.value("backoff_factor", e.http.backoff_factor);
            e.http.batch_size = s.value("batch_size", e.http.batch_size);
            e.http.max_in_flight = s.value("max_in_flight", e.http.max_in_flight);
        }
        if (j.contains("fit")) {
            check_keys(j["fit"], {"nr_topics", "min_topic_size", "n_neighbors", "min_distance", "reduced_dim", "metric",
                                  "assign_kappa", "softmax_temperature", "max_df", "n_epochs",
                                  "negative_sample_rate"},
                       "fit");
            c.fit = topics::fit_params_from_json(j["fit"]);
        }
        if (j.contains("coherence")) {
            const auto& s = j["coherence"];
            check_keys(s, {"top_n", "window_size", "epsilon"}, "coherence");
            c.coherence.top_n = s.value("top_n", c.coherence.top_n);
            c.coherence.window_size = s.value("window_size", c.coherence.window_size);
            c.coherence.epsilon = s.value("epsilon", c.coherence.epsilon);
        }
        if (j.contains("compare")) {
            const auto& s = j["compare"];
            check_keys(s, {"top_k", "cap_k", "pairing"}, "compare");
            c.compare.top_k = s.value("top_k", c.compare.top_k);
            c.compare.cap_k = s.value("cap_k", c.compare.cap_k);
            c.compare.pairing = pairing_from(s.value("pairing", std::string(pairing_name(c.compare.pairing))));
        }
    } catch (const nlohmann::json::exception& e) {
        throw BadInput(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw BadInput(std::string("config: ") + e.what());
    }
    c.fit.seed = c.seed;
    return c;
}

nlohmann::json to_json(const RunConfig& c) {
    auto fit = topics::to_json(c.fit);
    fit.erase("seed");
    return {{"corpus", c.corpus.string()},
            {"workdir", c.workdir.string()},
            {"stopwords", c.stopwords ? nlohmann::json(c.stopwords->string()) : nlohmann::json(nullptr)},
            {"seed", c.seed},
            {"split", {{"train", c.train_n}, {"eval", c.eval_n}}},
            {"placeholder", c.placeholder},
            {"llm",
             {{"base_url", c.llm.base_url},
              {"model_name", c.llm.model_name},
              {"max_tokens", c.llm.max_tokens},
              {"temperature", c.llm.temperature},
              {"timeout_ms", c.llm.request_timeout.count()},
              {"max_in_flight", c.llm.max_in_flight},
              {"retries", c.llm.retries},
              {"backoff_base_ms", c.llm.backoff_base.count()},
              {"backoff_factor", c.llm.backoff_factor}}},
            {"embedding",
             {{"provider", c.embedding.provider},
              {"dim", c.embedding.dim},
              {"seed", c.embedding.seed},
              {"base_url", c.embedding.http.base_url},
              {"model", c.embedding.http.model},
              {"timeout_ms", c.embedding.http.request_timeout.count()},
              {"retries", c.embedding.http.retries},
              {"backoff_base_ms", c.embedding.http.backoff_base.count()},
              {"backoff_factor", c.embedding.http.backoff_factor},
              {"batch_size", c.embedding.http.batch_size},
              {"max_in_flight", c.embedding.http.max_in_flight}}},
            {"fit", fit},
            {"coherence",
             {{"top_n", c.coherence.top_n}, {"window_size", c.coherence.window_size}, {"epsilon", c.coherence.epsilon}}},
            {"compare",
             {{"top_k", c.compare.top_k}, {"cap_k", c.compare.cap_k}, {"pairing", pairing_name(c.compare.pairing)}}}};
}

std::string config_hash(const RunConfig& c) {
    auto j = to_json(c);
    j.erase("corpus");
    j.erase("workdir");
    j["llm"].erase("base_url");
    j["llm"].erase("timeout_ms");
    j["llm"].erase("max_in_flight");
    j["embedding"].erase("base_url");
    j["embedding"].erase("timeout_ms");
    j["embedding"].erase("max_in_flight");
    if (c.stopwords) j["stopwords"] = io::read_text(*c.stopwords);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Topic modeling over LLM summaries of source code", "codetopics"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string workdir;
    std::string corpus;
    std::optional<std::uint64_t> seed;
    std::string base_url;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--workdir", workdir, "Directory holding all stage outputs");
    app.add_option("--seed", seed, "Seed for every randomized step");

    auto* prep = app.add_subcommand("prep", "Sanitize the corpus and split train/eval");
    std::optional<std::size_t> train_n, eval_n;
    prep->add_option("--corpus", corpus, "Line-delimited JSON records");
    prep->add_option("--train-n", train_n, "Training set size");
    prep->add_option("--eval-n", eval_n, "Evaluation set size");

    auto* summarize = app.add_subcommand("summarize", "Ask the LLM endpoint for function summaries");
    summarize->add_option("--base-url", base_url, "Chat-completions base URL");

    auto* fit = app.add_subcommand("fit", "Fit the docstring and/or summary topic models");
    std::string fit_model = "all";
    fit->add_option("--model", fit_model, "Which model to fit")->check(CLI::IsMember({"doc", "summ", "all"}));

    auto* infer = app.add_subcommand("infer", "Infer topic distributions on the evaluation set");
    std::string repr;
    std::string infer_model = "doc";
    infer->add_option("--repr", repr, "Input representation")
        ->required()
        ->check(CLI::IsMember({"summaries", "names", "docstrings"}));
    infer->add_option("--model", infer_model, "Model to infer with")->check(CLI::IsMember({"doc", "summ"}));

    auto* evaluate = app.add_subcommand("evaluate", "Compare inferred topics against the docstring reference");
    auto* report = app.add_subcommand("report", "Topic table, coherence data and 2-D document map");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kBadInput;
    }

    try {
        RunConfig c = read_config_file(config_path);
        if (const auto key = env_or_empty("CODETOPICS_API_KEY"); !key.empty()) {
            c.llm.api_key = key;
            c.embedding.http.api_key = key;
        }
        if (const auto url = env_or_empty("CODETOPICS_BASE_URL"); !url.empty()) c.llm.base_url = url;
        if (!workdir.empty()) c.workdir = workdir;
        if (!corpus.empty()) c.corpus = corpus;
        if (seed) {
            c.seed = *seed;
            c.fit.seed = *seed;
        }
        if (train_n) c.train_n = *train_n;
        if (eval_n) c.eval_n = *eval_n;
        if (!base_url.empty()) c.llm.base_url = base_url;
        c.validate();

        if (prep->parsed()) cmd_prep(c, err);
        else if (summarize->parsed()) cmd_summarize(c, err);
        else if (fit->parsed()) cmd_fit(c, fit_model, err);
        else if (infer->parsed()) cmd_infer(c, repr, infer_model, err);
        else if (evaluate->parsed()) cmd_evaluate(c, err);
        else if (report->parsed()) cmd_report(c, err);
        return kOk;
    } catch (const MissingStage& e) {
        err << "error: " << e.what() << '\n';
        return kMissingStage;
    } catch (const BadInput& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const corpus::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const topics::FitError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

}  // namespace codetopics::cli
