#pragma once

#include <filesystem>

#include "codetopics/topic_engine.hpp"

namespace codetopics::io {

// Writes config.json, vocab.json, topic_terms.bin, centroids.bin and
// assignments.csv into dir (created if needed). When the model metadata
// holds a "config_hash", it is stamped into every file.
void save_model(const std::filesystem::path& dir, const topics::TopicModel& model);

// Throws std::runtime_error naming the missing or inconsistent file.
topics::TopicModel load_model(const std::filesystem::path& dir);

}  // namespace codetopics::io
