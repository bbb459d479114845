#include "codetopics/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "codetopics/parallel.hpp"

namespace codetopics::hdbscan {

namespace {

// Caps lambda for zero-length edges so stabilities stay finite.
constexpr double kMinDistance = 1e-12;

double lambda_of(double distance) { return 1.0 / std::max(distance, kMinDistance); }

struct Hierarchy {
    // Internal node i (0-based) is node id n + i.
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    std::vector<double> distance;
    std::vector<std::size_t> size;  // indexed by node id; leaves have size 1
};

Hierarchy single_linkage(std::span<const MstEdge> edges, std::size_t n) {
    Hierarchy h;
    const std::size_t total = 2 * n - 1;
    h.size.assign(total, 1);
    std::vector<std::size_t> parent(total);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        std::size_t root = x;
        while (parent[root] != root) root = parent[root];
        while (parent[x] != root) {
            const std::size_t next = parent[x];
            parent[x] = root;
            x = next;
        }
        return root;
    };
    std::size_t next = n;
    for (const auto& e : edges) {
        const std::size_t ra = find(e.a);
        const std::size_t rb = find(e.b);
        h.left.push_back(ra);
        h.right.push_back(rb);
        h.distance.push_back(e.weight);
        h.size[next] = h.size[ra] + h.size[rb];
        parent[ra] = next;
        parent[rb] = next;
        ++next;
    }
    return h;
}

void collect_leaves(const Hierarchy& h, std::size_t n, std::size_t node, std::vector<std::size_t>& out) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
        const std::size_t x = stack.back();
        stack.pop_back();
        if (x < n) {
            out.push_back(x);
        } else {
            stack.push_back(h.right[x - n]);
            stack.push_back(h.left[x - n]);
        }
    }
}

}  // namespace

std::vector<double> core_distances(const Matrix& points, std::size_t min_samples) {
    const std::size_t n = points.rows();
    std::vector<double> core(n, 0.0);
    if (n == 0 || min_samples <= 1) return core;
    const std::size_t rank = std::min(min_samples, n) - 1;  // index among others, 0-based
    parallel_for(n, default_workers(), [&](std::size_t i) {
        std::vector<double> d;
        d.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) d.push_back(std::sqrt(squared_euclidean(points.row(i), points.row(j))));
        }
        if (d.empty()) return;
        const std::size_t r = std::min(rank, d.size()) - 1;
        std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(r), d.end());
        core[i] = d[r];
    });
    return core;
}

std::vector<MstEdge> mutual_reachability_mst(const Matrix& points, std::span<const double> core) {
    const std::size_t n = points.rows();
    std::vector<MstEdge> edges;
    if (n < 2) return edges;
    edges.reserve(n - 1);
    std::vector<char> in_tree(n, 0);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::uint32_t> from(n, 0);
    std::size_t current = 0;
    in_tree[0] = 1;
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t pick = n;
        double pick_w = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (in_tree[j]) continue;
            const double d = std::sqrt(squared_euclidean(points.row(current), points.row(j)));
            const double mr = std::max({core[current], core[j], d});
            if (mr < best[j]) {
                best[j] = mr;
                from[j] = static_cast<std::uint32_t>(current);
            }
            if (best[j] < pick_w) {
                pick_w = best[j];
                pick = j;
            }
        }
        in_tree[pick] = 1;
        edges.push_back({from[pick], static_cast<std::uint32_t>(pick), pick_w});
        current = pick;
    }
    std::stable_sort(edges.begin(), edges.end(),
                     [](const MstEdge& x, const MstEdge& y) { return x.weight < y.weight; });
    return edges;
}

CondensedTree condense(std::span<const MstEdge> sorted_mst, std::size_t n, std::size_t min_cluster_size) {
    CondensedTree tree;
    tree.n_points = n;
    if (n == 0) return tree;
    tree.n_clusters = 1;
    if (n == 1) return tree;
    if (sorted_mst.size() != n - 1) throw std::invalid_argument("condense: MST must have n - 1 edges");

    const Hierarchy h = single_linkage(sorted_mst, n);
    const std::size_t root = 2 * n - 2;
    std::vector<std::size_t> relabel(2 * n - 1, 0);
    std::vector<char> ignore(2 * n - 1, 0);
    std::size_t next_label = 1;

    std::deque<std::size_t> queue{root};
    std::vector<std::size_t> leaves;
    while (!queue.empty()) {
        const std::size_t node = queue.front();
        queue.pop_front();
        if (node < n || ignore[node]) continue;
        const std::size_t idx = node - n;
        const std::size_t l = h.left[idx];
        const std::size_t r = h.right[idx];
        const double lambda = lambda_of(h.distance[idx]);
        const std::size_t ls = h.size[l];
        const std::size_t rs = h.size[r];
        const std::size_t parent = relabel[node];

        auto fall_out = [&](std::size_t child) {
            leaves.clear();
            collect_leaves(h, n, child, leaves);
            for (std::size_t p : leaves) tree.entries.push_back({parent, p, false, lambda, 1});
            std::vector<std::size_t> stack{child};
            while (!stack.empty()) {
                const std::size_t x = stack.back();
                stack.pop_back();
                ignore[x] = 1;
                if (x >= n) {
                    stack.push_back(h.left[x - n]);
                    stack.push_back(h.right[x - n]);
                }
            }
        };

        if (ls >= min_cluster_size && rs >= min_cluster_size) {
            relabel[l] = next_label++;
            tree.entries.push_back({parent, relabel[l], true, lambda, ls});
            relabel[r] = next_label++;
            tree.entries.push_back({parent, relabel[r], true, lambda, rs});
            queue.push_back(l);
            queue.push_back(r);
        } else if (ls < min_cluster_size && rs < min_cluster_size) {
            fall_out(l);
            fall_out(r);
        } else if (ls < min_cluster_size) {
            fall_out(l);
            relabel[r] = parent;
            queue.push_back(r);
        } else {
            fall_out(r);
            relabel[l] = parent;
            queue.push_back(l);
        }
    }
    tree.n_clusters = next_label;
    return tree;
}

std::vector<double> stabilities(const CondensedTree& tree) {
    std::vector<double> birth(tree.n_clusters, 0.0);
    for (const auto& e : tree.entries) {
        if (e.child_is_cluster) birth[e.child] = e.lambda;
    }
    std::vector<double> stab(tree.n_clusters, 0.0);
    for (const auto& e : tree.entries) {
        stab[e.parent] += (e.lambda - birth[e.parent]) * static_cast<double>(e.size);
    }
    return stab;
}

std::vector<bool> select_clusters(const CondensedTree& tree, bool allow_single_cluster,
                                  std::size_t min_cluster_size) {
    const std::size_t m = tree.n_clusters;
    std::vector<bool> selected(m, false);
    if (m == 0) return selected;
    std::vector<std::vector<std::size_t>> children(m);
    for (const auto& e : tree.entries) {
        if (e.child_is_cluster) children[e.parent].push_back(e.child);
    }
    std::vector<double> stab = stabilities(tree);
    const bool root_eligible = allow_single_cluster && tree.n_points >= min_cluster_size;

    // Children always carry larger ids than their parent.
    for (std::size_t c = m; c-- > 0;) {
        if (c == 0 && !root_eligible) break;
        double child_sum = 0.0;
        for (std::size_t ch : children[c]) child_sum += stab[ch];
        if (!children[c].empty() && child_sum > stab[c]) {
            stab[c] = child_sum;
        } else {
            selected[c] = true;
            std::vector<std::size_t> stack(children[c].begin(), children[c].end());
            while (!stack.empty()) {
                const std::size_t x = stack.back();
                stack.pop_back();
                selected[x] = false;
                stack.insert(stack.end(), children[x].begin(), children[x].end());
            }
        }
    }
    return selected;
}

std::vector<int> label_points(const CondensedTree& tree, const std::vector<bool>& selected) {
    std::vector<int> labels(tree.n_points, -1);
    if (tree.n_clusters == 0) return labels;
    std::vector<std::size_t> parent_of(tree.n_clusters, 0);
    std::vector<std::size_t> point_parent(tree.n_points, 0);
    std::vector<char> placed(tree.n_points, 0);
    for (const auto& e : tree.entries) {
        if (e.child_is_cluster) {
            parent_of[e.child] = e.parent;
        } else {
            point_parent[e.child] = e.parent;
            placed[e.child] = 1;
        }
    }
    std::vector<int> cluster_label(tree.n_clusters, -1);
    int next = 0;
    for (std::size_t c = 0; c < tree.n_clusters; ++c) {
        if (selected[c]) cluster_label[c] = next++;
    }
    for (std::size_t p = 0; p < tree.n_points; ++p) {
        // A lone point never appears in the tree; it belongs to the root.
        std::size_t c = placed[p] ? point_parent[p] : 0;
        while (true) {
            if (selected[c]) {
                labels[p] = cluster_label[c];
                break;
            }
            if (c == 0) break;
            c = parent_of[c];
        }
    }
    return labels;
}

std::vector<int> cluster(const Matrix& points, const Params& params) {
    if (points.rows() == 0) throw std::invalid_argument("cluster: no points");
    if (params.min_cluster_size < 2) throw std::invalid_argument("cluster: min_cluster_size must be >= 2");
    const std::size_t min_samples = params.min_samples == 0 ? params.min_cluster_size : params.min_samples;
    const auto core = core_distances(points, min_samples);
    const auto mst = mutual_reachability_mst(points, core);
    const auto tree = condense(mst, points.rows(), params.min_cluster_size);
    const auto selected = select_clusters(tree, params.allow_single_cluster, params.min_cluster_size);
    return label_points(tree, selected);
}

}  // namespace codetopics::hdbscan
