#include "cli_harness.hpp"

#include <fstream>
#include <sstream>

#include "codetopics/cli.hpp"
#include "codetopics/text_io.hpp"

namespace fs = std::filesystem;

namespace testsupport {

CliResult run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "codetopics");
    std::ostringstream out, err;
    CliResult r;
    r.code = codetopics::cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("codetopics_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

CliResult run_pipeline(const fs::path& config) {
    const std::string cfg = config.string();
    const std::vector<std::vector<std::string>> stages = {
        {"prep"},
        {"summarize"},
        {"fit", "--model", "all"},
        {"infer", "--repr", "docstrings", "--model", "doc"},
        {"infer", "--repr", "summaries", "--model", "doc"},
        {"infer", "--repr", "names", "--model", "doc"},
        {"infer", "--repr", "summaries", "--model", "summ"},
        {"evaluate"},
        {"report"},
    };
    CliResult all;
    for (const auto& stage : stages) {
        std::vector<std::string> args = {"--config", cfg};
        args.insert(args.end(), stage.begin(), stage.end());
        const auto r = run_cli(args);
        all.out += r.out;
        all.err += r.err;
        all.code = r.code;
        if (r.code != 0) break;
    }
    return all;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
    }
    return files;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        rows.push_back(codetopics::io::parse_csv_line(line));
    }
    return rows;
}

}  // namespace testsupport
