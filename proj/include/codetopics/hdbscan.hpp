#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "codetopics/matrix.hpp"

namespace codetopics::hdbscan {

struct Params {
    std::size_t min_cluster_size = 25;
    std::size_t min_samples = 0;  // 0: same as min_cluster_size
    // The root may be selected as the single cluster when it is the most
    // stable node and holds at least min_cluster_size points.
    bool allow_single_cluster = true;
};

struct MstEdge {
    std::uint32_t a;
    std::uint32_t b;
    double weight;
};

// Euclidean distance to the min_samples-th nearest point, the point itself
// counted first.
std::vector<double> core_distances(const Matrix& points, std::size_t min_samples);

// Prim's algorithm over the dense mutual-reachability graph
// max(core_a, core_b, d(a, b)). Edges are returned sorted by weight.
std::vector<MstEdge> mutual_reachability_mst(const Matrix& points, std::span<const double> core);

struct CondensedEntry {
    std::size_t parent;  // cluster id, root = 0
    std::size_t child;   // cluster id or point index
    bool child_is_cluster;
    double lambda;       // 1 / distance at which the child leaves the parent
    std::size_t size;
};

struct CondensedTree {
    std::vector<CondensedEntry> entries;
    std::size_t n_clusters = 0;
    std::size_t n_points = 0;
};

CondensedTree condense(std::span<const MstEdge> sorted_mst, std::size_t n_points, std::size_t min_cluster_size);

// Excess of mass: sum over leaving children of (lambda - birth lambda) * size.
std::vector<double> stabilities(const CondensedTree& tree);

// Selected flags per cluster id under excess-of-mass selection.
std::vector<bool> select_clusters(const CondensedTree& tree, bool allow_single_cluster, std::size_t min_cluster_size);

// Labels 0..K-1 in ascending cluster-id order; -1 marks noise.
std::vector<int> label_points(const CondensedTree& tree, const std::vector<bool>& selected);

std::vector<int> cluster(const Matrix& points, const Params& params);

}  // namespace codetopics::hdbscan
