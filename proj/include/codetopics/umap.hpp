#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "codetopics/matrix.hpp"

namespace codetopics::umap {

struct Params {
    std::size_t n_neighbors = 10;
    double min_dist = 0.01;
    double spread = 1.0;
    std::size_t n_components = 5;
    std::size_t n_epochs = 200;
    std::size_t negative_sample_rate = 5;
    double learning_rate = 1.0;
    double repulsion_strength = 1.0;
    Metric metric = Metric::cosine;
    std::uint64_t seed = 42;
};

// k nearest neighbors of every row, self excluded, ordered by (distance, index).
struct KnnGraph {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<std::uint32_t> indices;  // n * k
    std::vector<double> distances;       // n * k
};

KnnGraph exact_knn(const Matrix& data, std::size_t k, Metric metric);

// Per-point bandwidth sigma and nearest-neighbor offset rho, calibrated so the
// summed memberships of the k neighbors equal log2(k).
struct SmoothKnn {
    std::vector<double> sigmas;
    std::vector<double> rhos;
};

SmoothKnn smooth_knn_distances(const KnnGraph& knn);

struct Edge {
    std::uint32_t head;
    std::uint32_t tail;
    double weight;
};

// Fuzzy union a + b - ab of the directed membership graph. Both directions
// of every undirected edge are listed, ordered by (head, tail).
std::vector<Edge> fuzzy_simplicial_set(const KnnGraph& knn, const SmoothKnn& smooth);

// Low-dimensional similarity kernel 1 / (1 + a d^(2b)).
struct Kernel {
    double a;
    double b;
};

// Least-squares fit of the kernel to the piecewise curve that is 1 below
// min_dist and exp(-(d - min_dist) / spread) beyond it, sampled on 300
// points in [0, 3 * spread].
Kernel fit_kernel(double spread, double min_dist);

// Full reduction: kNN graph, fuzzy set, seeded random initialization, SGD
// layout with negative sampling. Deterministic given params.seed.
Matrix embed(const Matrix& data, const Params& params);

// Neighborhood-preservation score in [0, 1]; requires k < n / 2.
double trustworthiness(const Matrix& high, const Matrix& low, std::size_t k, Metric high_metric);

}  // namespace codetopics::umap
