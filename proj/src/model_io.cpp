#include "codetopics/model_io.hpp"

#include <sstream>
#include <stdexcept>

#include "codetopics/binary_matrix.hpp"
#include "codetopics/text_io.hpp"

namespace codetopics::io {

namespace {

namespace fs = std::filesystem;

nlohmann::json stamp(const topics::TopicModel& model) {
    nlohmann::json j = {{"seed", model.params.seed}};
    if (model.metadata.contains("config_hash")) j["config_hash"] = model.metadata["config_hash"];
    return j;
}

void write_matrix(const fs::path& path, const Matrix& m, const nlohmann::json& base) {
    nlohmann::json header = base;
    header["rows"] = m.rows();
    header["cols"] = m.cols();
    std::vector<float> values(m.data().begin(), m.data().end());
    write_f32_blob(path, header, values);
}

Matrix read_matrix(const fs::path& path) {
    if (!fs::exists(path)) throw std::runtime_error("model file missing: " + path.string());
    const auto blob = read_f32_blob(path);
    const auto rows = blob.header.at("rows").get<std::size_t>();
    const auto cols = blob.header.at("cols").get<std::size_t>();
    if (blob.values.size() != rows * cols) throw std::runtime_error(path.string() + ": header does not match payload");
    return Matrix(rows, cols, std::vector<double>(blob.values.begin(), blob.values.end()));
}

nlohmann::json read_json(const fs::path& path) {
    if (!fs::exists(path)) throw std::runtime_error("model file missing: " + path.string());
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace

void save_model(const fs::path& dir, const topics::TopicModel& model) {
    fs::create_directories(dir);
    const nlohmann::json st = stamp(model);

    nlohmann::json config = st;
    config["n_topics"] = model.n_topics;
    config["params"] = topics::to_json(model.params);
    config["topic_sizes"] = model.topic_sizes;
    config["metadata"] = model.metadata;
    write_text(dir / "config.json", config.dump(2) + "\n");

    nlohmann::json vocab = st;
    vocab["words"] = model.vocabulary.words;
    vocab["doc_freq"] = model.vocabulary.doc_freq;
    write_text(dir / "vocab.json", vocab.dump(2) + "\n");

    write_matrix(dir / "topic_terms.bin", model.topic_terms, st);
    write_matrix(dir / "centroids.bin", model.centroids, st);

    std::ostringstream csv;
    csv << "# seed=" << model.params.seed;
    if (st.contains("config_hash")) csv << " config_hash=" << st["config_hash"].get<std::string>();
    csv << "\nid,topic,max_prob\n";
    for (std::size_t i = 0; i < model.train_ids.size(); ++i) {
        csv << csv_field(model.train_ids[i]) << ',' << model.train_assignments[i] << ','
            << format_number(model.train_max_prob[i]) << '\n';
    }
    write_text(dir / "assignments.csv", csv.str());
}

topics::TopicModel load_model(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("model directory missing: " + dir.string());
    topics::TopicModel model;
    const auto config = read_json(dir / "config.json");
    model.n_topics = config.at("n_topics").get<std::size_t>();
    model.params = topics::fit_params_from_json(config.at("params"));
    model.topic_sizes = config.at("topic_sizes").get<std::vector<std::size_t>>();
    model.metadata = config.value("metadata", nlohmann::json::object());

    const auto vocab = read_json(dir / "vocab.json");
    model.vocabulary.words = vocab.at("words").get<std::vector<std::string>>();
    model.vocabulary.doc_freq = vocab.at("doc_freq").get<std::vector<double>>();

    model.topic_terms = read_matrix(dir / "topic_terms.bin");
    model.centroids = read_matrix(dir / "centroids.bin");
    if (model.topic_terms.rows() != model.n_topics || model.topic_terms.cols() != model.vocabulary.size() ||
        model.centroids.rows() != model.n_topics) {
        throw std::runtime_error(dir.string() + ": model files disagree on shape");
    }

    const auto path = dir / "assignments.csv";
    if (!fs::exists(path)) throw std::runtime_error("model file missing: " + path.string());
    std::istringstream in(read_text(path));
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        const auto f = parse_csv_line(line);
        if (f.size() != 3) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
        model.train_ids.push_back(f[0]);
        model.train_assignments.push_back(std::stoi(f[1]));
        model.train_max_prob.push_back(std::stod(f[2]));
    }
    return model;
}

}  // namespace codetopics::io
