#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "codetopics/corpus.hpp"
#include "codetopics/embedder.hpp"
#include "codetopics/matrix.hpp"

namespace testsupport {

// Letters-only word j of generating vocabulary v; no two vocabularies share
// a word and none is an English stopword.
std::string vocab_word(std::size_t v, std::size_t j);
std::vector<std::string> vocabulary(std::size_t v, std::size_t size = 50);

struct SyntheticDoc {
    std::size_t group;
    codetopics::corpus::Document doc;
};

// n_per_group documents of `length` tokens drawn uniformly from each of
// n_groups disjoint vocabularies, groups interleaved.
std::vector<SyntheticDoc> topic_corpus(std::size_t n_groups, std::size_t n_per_group, std::size_t length,
                                       std::uint64_t seed, std::size_t vocab_size = 50);

std::vector<codetopics::embedder::Embedding> hash_embeddings(const std::vector<SyntheticDoc>& docs,
                                                             std::size_t dim = 256, std::uint64_t seed = 0);

// Isotropic Gaussian blobs: n_per_blob points each, centers pairwise
// `separation` apart (scaled simplex corners), per-axis sigma.
struct Blobs {
    codetopics::Matrix points;
    std::vector<int> labels;
};
Blobs gaussian_blobs(std::size_t n_blobs, std::size_t n_per_blob, std::size_t dim, double sigma, double separation,
                     std::uint64_t seed);

// CodeSearchNet-style JSON lines whose names, docstrings and code bodies all
// draw on the vocabulary of each record's group. Record ids are "g<group>_<i>".
std::string code_corpus_jsonl(std::size_t n_groups, std::size_t n_per_group, std::uint64_t seed);

}  // namespace testsupport
