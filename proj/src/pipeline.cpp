#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "codetopics/cli.hpp"
#include "codetopics/codeprep.hpp"
#include "codetopics/corpus.hpp"
#include "codetopics/model_io.hpp"
#include "codetopics/rng.hpp"
#include "codetopics/text_io.hpp"
#include "codetopics/umap.hpp"

namespace codetopics::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Layout {
    fs::path prep, summaries, embeddings, models, infer, evaluate, report;

    explicit Layout(const fs::path& w)
        : prep(w / "prep"),
          summaries(w / "summaries"),
          embeddings(w / "embeddings"),
          models(w / "models"),
          infer(w / "infer"),
          evaluate(w / "evaluate"),
          report(w / "report") {}
};

json stamp(const RunConfig& c) { return {{"config_hash", config_hash(c)}, {"seed", c.seed}}; }

std::string csv_comment(const RunConfig& c) {
    return "# config_hash=" + config_hash(c) + " seed=" + std::to_string(c.seed) + "\n";
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
    std::string s;
    for (const auto& r : rows) {
        s += r.dump();
        s += '\n';
    }
    io::write_text(path, s);
}

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

std::vector<json> read_jsonl(const fs::path& path, const std::string& stage) {
    if (!fs::exists(path)) throw MissingStage(stage, path.string() + " not found");
    std::vector<json> rows;
    std::istringstream in(io::read_text(path));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) rows.push_back(json::parse(line));
    }
    return rows;
}

json read_json(const fs::path& path, const std::string& stage) {
    if (!fs::exists(path)) throw MissingStage(stage, path.string() + " not found");
    return json::parse(io::read_text(path));
}

corpus::StopwordSet stopwords_for(const RunConfig& c) {
    if (c.stopwords) return corpus::load_stopwords(*c.stopwords);
    return corpus::default_stopwords();
}

struct SplitIds {
    std::vector<std::string> train;
    std::vector<std::string> eval;
};

SplitIds read_split(const Layout& l) {
    const auto j = read_json(l.prep / "split.json", "prep");
    return {j.at("train").get<std::vector<std::string>>(), j.at("eval").get<std::vector<std::string>>()};
}

// Raw text per id for one representation.
std::unordered_map<std::string, std::string> raw_texts(const Layout& l, const std::string& repr) {
    std::unordered_map<std::string, std::string> out;
    if (repr == "summaries") {
        for (const auto& r : read_jsonl(l.summaries / "summaries.jsonl", "summarize")) {
            out[r.at("id").get<std::string>()] = r.at("summary").get<std::string>();
        }
    } else if (repr == "docstrings") {
        for (const auto& r : read_jsonl(l.prep / "docstrings.jsonl", "prep")) {
            out[r.at("id").get<std::string>()] = r.at("docstring").get<std::string>();
        }
    } else if (repr == "names") {
        for (const auto& r : read_jsonl(l.prep / "names.jsonl", "prep")) {
            std::string text;
            for (const auto& t : r.at("tokens")) {
                if (!text.empty()) text += ' ';
                text += t.get<std::string>();
            }
            out[r.at("id").get<std::string>()] = text;
        }
    } else {
        throw BadInput("unknown representation '" + repr + "'");
    }
    return out;
}

// Preprocessed documents for the given ids, in that order. Ids without text
// for this representation are left out.
std::vector<corpus::Document> documents(const Layout& l, const RunConfig& c, const std::string& repr,
                                        const std::vector<std::string>& ids) {
    const auto texts = raw_texts(l, repr);
    const auto stop = stopwords_for(c);
    std::vector<corpus::Document> docs;
    for (const auto& id : ids) {
        const auto it = texts.find(id);
        if (it == texts.end()) continue;
        docs.push_back(corpus::preprocess_text(id, it->second, stop));
    }
    return docs;
}

// Embeddings of every split document with at least one token, cached in
// embeddings/<repr>.bin and recomputed when the texts or provider change.
std::unordered_map<std::string, std::vector<float>> embeddings_for(const Layout& l, const RunConfig& c,
                                                                   const std::string& repr, std::ostream& log) {
    const SplitIds split = read_split(l);
    std::vector<std::string> ids = split.train;
    ids.insert(ids.end(), split.eval.begin(), split.eval.end());
    std::vector<embedder::TextItem> items;
    for (const auto& d : documents(l, c, repr, ids)) {
        if (!d.tokens.empty()) items.push_back({d.id, d.token_text()});
    }
    std::uint64_t digest = fnv1a64("");
    for (const auto& it : items) {
        digest = fnv1a64(it.id, digest);
        digest = fnv1a64(std::string_view("\0", 1), digest);
        digest = fnv1a64(it.text, digest);
        digest = fnv1a64(std::string_view("\0", 1), digest);
    }
    auto provider = make_provider(c);
    const json describe = provider->describe();
    const fs::path cache = l.embeddings / (repr + ".bin");

    std::unordered_map<std::string, std::vector<float>> out;
    if (fs::exists(cache)) {
        json header;
        auto cached = embedder::read_cache(cache, &header);
        if (header.value("text_digest", std::uint64_t{0}) == digest && header.value("provider", json()) == describe) {
            for (auto& e : cached) out.emplace(std::move(e.id), std::move(e.vector));
            return out;
        }
    }
    if (items.empty()) return out;
    log << "embedding " << items.size() << " " << repr << "\n";
    auto result = embedder::embed(items, *provider);
    json header = stamp(c);
    header["provider"] = describe;
    header["text_digest"] = digest;
    header["representation"] = repr;
    fs::create_directories(l.embeddings);
    embedder::write_cache(cache, result.embeddings, header);
    std::vector<json> failures;
    for (const auto& f : result.failures) failures.push_back({{"id", f.id}, {"error", f.error}});
    write_jsonl(l.embeddings / (repr + "_failures.jsonl"), failures);
    for (auto& e : result.embeddings) out.emplace(std::move(e.id), std::move(e.vector));
    return out;
}

std::string model_repr(const std::string& model) { return model == "doc" ? "docstrings" : "summaries"; }

topics::TopicModel load_model(const Layout& l, const std::string& model) {
    const fs::path dir = l.models / model;
    if (!fs::exists(dir / "config.json")) throw MissingStage("fit", "no model at " + dir.string() + "; run `fit --model " + model + "`");
    return io::load_model(dir);
}

fs::path infer_path(const Layout& l, const std::string& model, const std::string& repr) {
    return l.infer / (model + "_" + repr + ".jsonl");
}

std::vector<eval::InferenceRecord> read_inference(const Layout& l, const std::string& model, const std::string& repr) {
    const fs::path path = infer_path(l, model, repr);
    if (!fs::exists(path)) {
        throw MissingStage("infer", path.string() + " not found; run `infer --repr " + repr + " --model " + model + "`");
    }
    std::vector<eval::InferenceRecord> out;
    for (const auto& r : read_jsonl(path, "infer")) {
        out.push_back({r.at("id").get<std::string>(), r.at("probs").get<std::vector<double>>(), r.at("topic").get<int>()});
    }
    return out;
}

std::string cell(const std::optional<double>& v) { return v ? io::format_number(*v) : std::string(); }

json cell_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::unique_ptr<embedder::EmbeddingProvider> make_provider(const RunConfig& c) {
    if (c.embedding.provider == "hash") return std::make_unique<embedder::HashEmbedder>(c.embedding.dim, c.embedding.seed);
    return std::make_unique<embedder::HttpEmbedder>(c.embedding.http);
}

void cmd_prep(const RunConfig& c, std::ostream& log) {
    if (c.corpus.empty()) throw BadInput("no corpus given (use --corpus or the config file)");
    if (!fs::is_regular_file(c.corpus)) throw BadInput("cannot read corpus " + c.corpus.string());
    const Layout l(c.workdir);
    const auto loaded = corpus::load_records(c.corpus);

    std::vector<json> failures;
    for (const auto& r : loaded.rejected) {
        failures.push_back({{"id", r.id}, {"line", r.line}, {"stage", "load"}, {"error", r.reason}});
    }
    std::vector<corpus::CodeRecord> kept;
    std::vector<json> sanitized, names, docstrings, warnings;
    for (const auto& rec : loaded.records) {
        codeprep::SanitizeResult res;
        try {
            res = codeprep::sanitize(rec, c.placeholder);
        } catch (const codeprep::CodeprepError& e) {
            failures.push_back({{"id", rec.id}, {"stage", "sanitize"}, {"error", e.what()}});
            continue;
        }
        for (const auto& w : res.warnings) warnings.push_back({{"id", rec.id}, {"warning", w}});
        kept.push_back(rec);
        sanitized.push_back({{"id", rec.id}, {"code", res.function.code}, {"placeholder", res.function.placeholder}});
        names.push_back({{"id", rec.id}, {"func_name", rec.func_name}, {"tokens", corpus::tokenize_identifier(rec.func_name)}});
        docstrings.push_back({{"id", rec.id}, {"docstring", rec.docstring}});
    }

    corpus::Split split;
    try {
        split = corpus::split(kept, c.train_n, c.eval_n, c.seed);
    } catch (const std::invalid_argument& e) {
        throw BadInput(e.what());
    }
    std::vector<std::string> train_ids, eval_ids;
    for (const auto& r : split.train) train_ids.push_back(r.id);
    for (const auto& r : split.eval) eval_ids.push_back(r.id);

    fs::create_directories(l.prep);
    write_jsonl(l.prep / "sanitized.jsonl", sanitized);
    write_jsonl(l.prep / "names.jsonl", names);
    write_jsonl(l.prep / "docstrings.jsonl", docstrings);
    write_jsonl(l.prep / "failures.jsonl", failures);
    write_jsonl(l.prep / "warnings.jsonl", warnings);
    json sj = stamp(c);
    sj["train"] = train_ids;
    sj["eval"] = eval_ids;
    write_json(l.prep / "split.json", sj);
    json manifest = stamp(c);
    manifest["stage"] = "prep";
    manifest["placeholder"] = c.placeholder;
    manifest["counts"] = {{"records", loaded.records.size() + loaded.rejected.size()},
                          {"sanitized", sanitized.size()},
                          {"failures", failures.size()},
                          {"warnings", warnings.size()},
                          {"train", train_ids.size()},
                          {"eval", eval_ids.size()}};
    write_json(l.prep / "manifest.json", manifest);
    log << "prep: " << sanitized.size() << " sanitized, " << failures.size() << " failed, split "
        << train_ids.size() << "/" << eval_ids.size() << "\n";
}

void cmd_summarize(const RunConfig& c, std::ostream& log) {
    const Layout l(c.workdir);
    const SplitIds split = read_split(l);
    std::unordered_set<std::string> wanted(split.train.begin(), split.train.end());
    wanted.insert(split.eval.begin(), split.eval.end());
    std::vector<codeprep::SanitizedFunction> batch;
    for (const auto& r : read_jsonl(l.prep / "sanitized.jsonl", "prep")) {
        const auto id = r.at("id").get<std::string>();
        if (wanted.contains(id)) batch.push_back({id, r.at("code").get<std::string>(), r.at("placeholder").get<std::string>()});
    }
    log << "summarize: " << batch.size() << " functions via " << c.llm.base_url << "\n";
    const auto results = summarizer::summarize(batch, c.llm);
    std::vector<json> ok, failed;
    for (const auto& r : results) {
        if (!r.ok()) {
            failed.push_back({{"id", r.id}, {"error", r.error}});
            continue;
        }
        json j = {{"id", r.id}, {"summary", r.summary}, {"model_name", r.model_name}};
        if (r.prompt_tokens) j["prompt_tokens"] = *r.prompt_tokens;
        if (r.completion_tokens) j["completion_tokens"] = *r.completion_tokens;
        ok.push_back(std::move(j));
    }
    fs::create_directories(l.summaries);
    write_jsonl(l.summaries / "summaries.jsonl", ok);
    write_jsonl(l.summaries / "failures.jsonl", failed);
    json manifest = stamp(c);
    manifest["stage"] = "summarize";
    manifest["model_name"] = c.llm.model_name;
    manifest["counts"] = {{"requested", batch.size()}, {"summarized", ok.size()}, {"failures", failed.size()}};
    write_json(l.summaries / "manifest.json", manifest);
    log << "summarize: " << ok.size() << " ok, " << failed.size() << " failed\n";
}

void cmd_fit(const RunConfig& c, const std::string& model, std::ostream& log) {
    if (model == "all") {
        cmd_fit(c, "doc", log);
        cmd_fit(c, "summ", log);
        return;
    }
    if (model != "doc" && model != "summ") throw BadInput("unknown model '" + model + "'");
    const Layout l(c.workdir);
    const std::string repr = model_repr(model);
    const SplitIds split = read_split(l);
    const auto all_docs = documents(l, c, repr, split.train);
    const auto emb = embeddings_for(l, c, repr, log);

    std::vector<corpus::Document> docs;
    std::vector<embedder::Embedding> embs;
    std::size_t without_tokens = 0;
    std::size_t without_embedding = 0;
    for (const auto& d : all_docs) {
        if (d.tokens.empty()) {
            ++without_tokens;
            continue;
        }
        const auto it = emb.find(d.id);
        if (it == emb.end()) {
            ++without_embedding;
            continue;
        }
        docs.push_back(d);
        embs.push_back({d.id, it->second});
    }
    log << "fit " << model << ": " << docs.size() << " documents\n";
    auto m = topics::fit(docs, embs, c.fit);
    m.metadata["config_hash"] = config_hash(c);
    m.metadata["representation"] = repr;
    m.metadata["embedding"] = make_provider(c)->describe();
    m.metadata["train_ids_total"] = split.train.size();
    m.metadata["train_ids_without_text"] = split.train.size() - all_docs.size();
    m.metadata["train_docs_without_tokens"] = without_tokens;
    m.metadata["train_docs_without_embedding"] = without_embedding;
    io::save_model(l.models / model, m);
    log << "fit " << model << ": " << m.n_topics << " topics\n";
}

void cmd_infer(const RunConfig& c, const std::string& representation, const std::string& model, std::ostream& log) {
    const Layout l(c.workdir);
    const auto m = load_model(l, model);
    if (m.metadata.value("config_hash", std::string()) != config_hash(c)) {
        log << "warning: model " << model << " was fitted under a different configuration\n";
    }
    const SplitIds split = read_split(l);
    const auto emb = embeddings_for(l, c, representation, log);
    std::vector<json> rows;
    std::size_t skipped = 0;
    for (const auto& id : split.eval) {
        const auto it = emb.find(id);
        if (it == emb.end()) {
            ++skipped;
            continue;
        }
        const auto rec = eval::infer(m, id, it->second);
        rows.push_back({{"id", rec.id}, {"topic", rec.topic}, {"probs", rec.probs}});
    }
    fs::create_directories(l.infer);
    write_jsonl(infer_path(l, model, representation), rows);
    json manifest = stamp(c);
    manifest["stage"] = "infer";
    manifest["model"] = model;
    manifest["representation"] = representation;
    manifest["counts"] = {{"inferred", rows.size()}, {"skipped", skipped}};
    write_json(l.infer / (model + "_" + representation + ".manifest.json"), manifest);
    log << "infer " << model << "/" << representation << ": " << rows.size() << " documents, " << skipped
        << " skipped\n";
}

void cmd_evaluate(const RunConfig& c, std::ostream& log) {
    const Layout l(c.workdir);
    const auto model_doc = load_model(l, "doc");
    const auto model_summ = load_model(l, "summ");
    const auto reference = read_inference(l, "doc", "docstrings");
    const auto doc_summ = read_inference(l, "doc", "summaries");
    const auto doc_names = read_inference(l, "doc", "names");
    const auto summ_summ = read_inference(l, "summ", "summaries");
    const std::size_t n_eval = read_split(l).eval.size();

    std::vector<eval::ComparisonRow> rows;
    rows.push_back(eval::compare_distributions("M_doc", "summaries", model_doc, reference, doc_summ, c.compare));
    rows.push_back(eval::compare_distributions("M_doc", "names", model_doc, reference, doc_names, c.compare));
    rows.push_back(eval::compare_word_overlap("M_summ", "summaries", model_doc, reference, model_summ, summ_summ, c.compare));
    for (auto& r : rows) r.n_skipped = n_eval - r.n_pairs;

    std::string csv = csv_comment(c);
    csv += "model,input,d_mse,d_top,d_topw,d_cap,n_pairs,n_cap_pairs,n_skipped\n";
    json jrows = json::array();
    std::vector<json> per_doc;
    for (const auto& r : rows) {
        const bool cross = r.model == "M_summ";
        auto na = [&](const std::optional<double>& v) { return cross ? std::string("N/A") : cell(v); };
        auto na_json = [&](const std::optional<double>& v) { return cross ? json("N/A") : cell_json(v); };
        csv += r.model + "," + r.representation + "," + na(r.d_mse) + "," + na(r.d_top) + "," + na(r.d_topw) + "," +
               cell(r.d_cap) + "," + std::to_string(r.n_pairs) + "," + std::to_string(r.n_cap_pairs) + "," +
               std::to_string(r.n_skipped) + "\n";
        jrows.push_back({{"model", r.model},
                         {"input", r.representation},
                         {"d_mse", na_json(r.d_mse)},
                         {"d_top", na_json(r.d_top)},
                         {"d_topw", na_json(r.d_topw)},
                         {"d_cap", cell_json(r.d_cap)},
                         {"n_pairs", r.n_pairs},
                         {"n_cap_pairs", r.n_cap_pairs},
                         {"n_skipped", r.n_skipped}});
        for (const auto& p : r.per_document) {
            per_doc.push_back({{"model", r.model},
                               {"input", r.representation},
                               {"id", p.id},
                               {"d_mse", cell_json(p.mse)},
                               {"d_top", cell_json(p.top)},
                               {"d_topw", cell_json(p.topw)},
                               {"d_cap", cell_json(p.cap)}});
        }
    }
    json out = stamp(c);
    out["reference"] = {{"model", "M_doc"}, {"input", "docstrings"}};
    out["top_k"] = c.compare.top_k;
    out["cap_k"] = c.compare.cap_k;
    out["pairing"] = c.compare.pairing == eval::Pairing::rank ? "rank" : "all_pairs";
    out["rows"] = jrows;
    fs::create_directories(l.evaluate);
    io::write_text(l.evaluate / "comparison.csv", csv);
    write_json(l.evaluate / "comparison.json", out);
    write_jsonl(l.evaluate / "per_document.jsonl", per_doc);
    log << "evaluate: " << rows.size() << " rows written\n";
}

void cmd_report(const RunConfig& c, std::ostream& log) {
    const Layout l(c.workdir);
    const SplitIds split = read_split(l);
    fs::create_directories(l.report);
    json manifest = stamp(c);
    manifest["stage"] = "report";
    std::ostringstream notes;
    notes << "# Report notes\n\n"
          << "config_hash " << config_hash(c) << ", seed " << c.seed << "\n\n"
          << "- nr_topics = " << c.fit.nr_topics
          << " is read as the number of real topics; the outlier label -1 is not counted.\n"
          << "- Topic distributions range over real topics only.\n"
          << "- The high-frequency word filter (max_df " << io::format_number(c.fit.max_df)
          << ") is computed on the training split of each model's own corpus.\n"
          << "- Topic ids are 0-based and ordered by training-set size.\n";

    for (const std::string model : {"doc", "summ"}) {
        const auto m = load_model(l, model);
        const auto ref_docs = documents(l, c, model_repr(model), split.train);
        std::string table = csv_comment(c) + "topic,top_words,coherence\n";
        std::string chart = csv_comment(c) + "topic,coherence\n";
        json topics_json = json::array();
        std::vector<double> scores;
        std::size_t with_missing = 0;
        for (std::size_t t = 0; t < m.n_topics; ++t) {
            const auto top5 = topics::top_words(m, static_cast<int>(t), 5);
            const auto topn = topics::top_words(m, static_cast<int>(t), c.coherence.top_n);
            const auto coh = eval::coherence_cv(topn, ref_docs, c.coherence);
            scores.push_back(coh.score);
            with_missing += coh.missing_words.empty() ? 0 : 1;
            std::string words;
            for (const auto& w : top5) words += (words.empty() ? "" : ", ") + w;
            table += std::to_string(t) + "," + io::csv_field(words) + "," + io::format_number(coh.score) + "\n";
            chart += std::to_string(t) + "," + io::format_number(coh.score) + "\n";
            topics_json.push_back({{"topic", t}, {"top_words", top5}, {"coherence", coh.score},
                                   {"missing_words", coh.missing_words}, {"size", m.topic_sizes[t]}});
        }
        const double mean = eval::mean(scores).value_or(0.0);
        chart += "mean," + io::format_number(mean) + "\n";
        io::write_text(l.report / ("topics_" + model + ".csv"), table);
        io::write_text(l.report / ("coherence_" + model + ".csv"), chart);
        json cj = stamp(c);
        cj["model"] = model;
        cj["topics"] = topics_json;
        cj["mean"] = mean;
        write_json(l.report / ("coherence_" + model + ".json"), cj);
        manifest[model] = {{"n_topics", m.n_topics}, {"mean_coherence", mean}};

        const std::size_t requested = c.fit.nr_topics;
        notes << "- Model " << model << ": " << m.n_topics << " topics";
        if (m.n_topics < requested) notes << " (fewer than the requested " << requested << "; clustering found no more)";
        notes << ", " << m.metadata.value("n_outliers", std::size_t{0}) << " training outliers, mean coherence "
              << io::format_number(mean) << ".\n";
        if (with_missing > 0) {
            notes << "- Model " << model << ": " << with_missing
                  << " topic(s) have top words absent from the reference corpus windows.\n";
        }
    }

    // 2-D map of the evaluation summaries, colored by summary-model topic.
    const auto m_summ = load_model(l, "summ");
    const auto emb = embeddings_for(l, c, "summaries", log);
    std::vector<std::string> mapped;
    std::vector<embedder::Embedding> map_emb;
    for (const auto& id : split.eval) {
        if (const auto it = emb.find(id); it != emb.end()) {
            mapped.push_back(id);
            map_emb.push_back({id, it->second});
        }
    }
    std::map<std::string, std::pair<double, double>> coords;
    if (map_emb.size() >= 3) {
        topics::FitParams p = c.fit;
        p.n_neighbors = std::min(p.n_neighbors, map_emb.size() - 1);
        const Matrix xy = topics::reduce_dim(topics::to_matrix(map_emb), p, 2);
        for (std::size_t i = 0; i < mapped.size(); ++i) coords[mapped[i]] = {xy(i, 0), xy(i, 1)};
    }
    std::string map_csv = csv_comment(c) + "id,x,y,topic\n";
    std::size_t unplaced = 0;
    for (const auto& id : split.eval) {
        const auto it = coords.find(id);
        if (it == coords.end()) {
            ++unplaced;
            map_csv += io::csv_field(id) + ",,,-1\n";
            continue;
        }
        const auto rec = eval::infer(m_summ, id, emb.at(id));
        map_csv += io::csv_field(id) + "," + io::format_number(it->second.first) + "," +
                   io::format_number(it->second.second) + "," + std::to_string(rec.topic) + "\n";
    }
    io::write_text(l.report / "document_map.csv", map_csv);
    if (unplaced > 0) notes << "- " << unplaced << " evaluation document(s) have no summary embedding and no map position.\n";
    manifest["document_map"] = {{"rows", split.eval.size()}, {"unplaced", unplaced}};
    io::write_text(l.report / "notes.md", notes.str());
    write_json(l.report / "manifest.json", manifest);
    log << "report: written to " << l.report.string() << "\n";
}

}  // namespace codetopics::cli
