#include "codetopics/umap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "codetopics/parallel.hpp"
#include "codetopics/rng.hpp"

namespace codetopics::umap {

namespace {

constexpr double kSmoothKTolerance = 1e-5;
constexpr double kMinKDistScale = 1e-3;
constexpr int kBandwidthIterations = 64;

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

// Row-normalized copy used for cosine distance so each pair costs one dot.
struct Prepared {
    Matrix unit;
    std::vector<char> zero;
};

Prepared prepare(const Matrix& data, Metric metric) {
    Prepared out;
    if (metric != Metric::cosine) return out;
    out.unit = data;
    out.zero.assign(data.rows(), 0);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        auto r = out.unit.row(i);
        const double nr = norm(r);
        if (nr > 0.0) {
            for (double& x : r) x /= nr;
        } else {
            out.zero[i] = 1;
        }
    }
    return out;
}

// Distances from row i to every row, self excluded, sorted by (distance, index).
std::vector<std::pair<double, std::uint32_t>> ranked_row(const Matrix& data, const Prepared& prepared,
                                                         std::size_t i, Metric metric) {
    std::vector<std::pair<double, std::uint32_t>> row;
    row.reserve(data.rows() - 1);
    for (std::size_t j = 0; j < data.rows(); ++j) {
        if (j == i) continue;
        double d;
        if (metric == Metric::cosine) {
            d = (prepared.zero[i] || prepared.zero[j])
                    ? 1.0
                    : std::max(0.0, 1.0 - dot(prepared.unit.row(i), prepared.unit.row(j)));
        } else {
            d = std::sqrt(squared_euclidean(data.row(i), data.row(j)));
        }
        row.emplace_back(d, static_cast<std::uint32_t>(j));
    }
    return row;
}

}  // namespace

KnnGraph exact_knn(const Matrix& data, std::size_t k, Metric metric) {
    const std::size_t n = data.rows();
    if (k == 0 || n < k + 1) {
        throw std::invalid_argument("exact_knn: need at least k + 1 = " + std::to_string(k + 1) +
                                    " points, got " + std::to_string(n));
    }
    const Prepared prepared = prepare(data, metric);
    KnnGraph g{n, k, std::vector<std::uint32_t>(n * k), std::vector<double>(n * k)};
    parallel_for(n, default_workers(), [&](std::size_t i) {
        auto row = ranked_row(data, prepared, i, metric);
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
        for (std::size_t j = 0; j < k; ++j) {
            g.distances[i * k + j] = row[j].first;
            g.indices[i * k + j] = row[j].second;
        }
    });
    return g;
}

SmoothKnn smooth_knn_distances(const KnnGraph& knn) {
    const std::size_t n = knn.n;
    const std::size_t k = knn.k;
    const double target = std::log2(static_cast<double>(k));
    const double mean_all = n * k == 0 ? 0.0
        : std::accumulate(knn.distances.begin(), knn.distances.end(), 0.0) / static_cast<double>(n * k);

    SmoothKnn out{std::vector<double>(n), std::vector<double>(n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        const double* d = knn.distances.data() + i * k;
        double rho = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (d[j] > 0.0) {
                rho = d[j];
                break;
            }
        }
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double mid = 1.0;
        for (int it = 0; it < kBandwidthIterations; ++it) {
            double psum = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                const double gap = d[j] - rho;
                psum += gap > 0.0 ? std::exp(-gap / mid) : 1.0;
            }
            if (std::abs(psum - target) < kSmoothKTolerance) break;
            if (psum > target) {
                hi = mid;
                mid = (lo + hi) / 2.0;
            } else {
                lo = mid;
                mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
            }
        }
        const double mean_i = std::accumulate(d, d + k, 0.0) / static_cast<double>(k);
        const double floor = kMinKDistScale * (rho > 0.0 ? mean_i : mean_all);
        out.sigmas[i] = std::max(mid, floor);
        out.rhos[i] = rho;
    }
    return out;
}

std::vector<Edge> fuzzy_simplicial_set(const KnnGraph& knn, const SmoothKnn& smooth) {
    // (lo, hi) -> {membership lo->hi, membership hi->lo}
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < knn.n; ++i) {
        for (std::size_t j = 0; j < knn.k; ++j) {
            const auto nb = knn.indices[i * knn.k + j];
            const double gap = knn.distances[i * knn.k + j] - smooth.rhos[i];
            const double sigma = smooth.sigmas[i];
            const double w = (gap <= 0.0 || sigma == 0.0) ? 1.0 : std::exp(-gap / sigma);
            const auto self = static_cast<std::uint32_t>(i);
            if (self < nb) pairs[{self, nb}].first = w;
            else pairs[{nb, self}].second = w;
        }
    }
    std::vector<Edge> edges;
    edges.reserve(pairs.size() * 2);
    for (const auto& [key, ab] : pairs) {
        const double w = ab.first + ab.second - ab.first * ab.second;
        if (w <= 0.0) continue;
        edges.push_back({key.first, key.second, w});
        edges.push_back({key.second, key.first, w});
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        return std::tie(x.head, x.tail) < std::tie(y.head, y.tail);
    });
    return edges;
}

Kernel fit_kernel(double spread, double min_dist) {
    if (!(spread > 0.0) || !(min_dist >= 0.0)) throw std::invalid_argument("fit_kernel: bad spread/min_dist");
    constexpr int kSamples = 300;
    std::vector<double> xs(kSamples), ys(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        xs[i] = 3.0 * spread * i / (kSamples - 1);
        ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
    }
    auto sse = [&](double a, double b) {
        double s = 0.0;
        for (int i = 0; i < kSamples; ++i) {
            const double r = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b)) - ys[i];
            s += r * r;
        }
        return s;
    };

    // Levenberg-Marquardt from (1, 1).
    double a = 1.0, b = 1.0, lambda = 1e-3;
    double current = sse(a, b);
    for (int iter = 0; iter < 500; ++iter) {
        double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
        for (int i = 0; i < kSamples; ++i) {
            const double x = xs[i];
            if (x <= 0.0) continue;  // f = 1 and both derivatives vanish
            const double p = std::pow(x, 2.0 * b);
            const double denom = 1.0 + a * p;
            const double r = 1.0 / denom - ys[i];
            const double ja = -p / (denom * denom);
            const double jb = -a * p * 2.0 * std::log(x) / (denom * denom);
            jtj00 += ja * ja;
            jtj01 += ja * jb;
            jtj11 += jb * jb;
            jtr0 += ja * r;
            jtr1 += jb * r;
        }
        bool accepted = false;
        for (int tries = 0; tries < 50 && !accepted; ++tries) {
            const double m00 = jtj00 * (1.0 + lambda);
            const double m11 = jtj11 * (1.0 + lambda);
            const double det = m00 * m11 - jtj01 * jtj01;
            if (det == 0.0) {
                lambda *= 10.0;
                continue;
            }
            const double da = (-jtr0 * m11 + jtr1 * jtj01) / det;
            const double db = (-jtr1 * m00 + jtr0 * jtj01) / det;
            const double na = a + da, nb = b + db;
            const double candidate = (na > 0.0 && nb > 0.0) ? sse(na, nb) : std::numeric_limits<double>::infinity();
            if (candidate < current) {
                const double step = std::abs(da) + std::abs(db);
                a = na;
                b = nb;
                const double improvement = current - candidate;
                current = candidate;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                if (step < 1e-12 || improvement < 1e-16 * current) return {a, b};
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) break;
    }
    return {a, b};
}

Matrix embed(const Matrix& data, const Params& params) {
    const std::size_t n = data.rows();
    const std::size_t dim = params.n_components;
    if (dim == 0) throw std::invalid_argument("umap: n_components must be >= 1");
    if (n < params.n_neighbors + 1) {
        throw std::invalid_argument("umap: need at least n_neighbors + 1 = " +
                                    std::to_string(params.n_neighbors + 1) + " points, got " + std::to_string(n));
    }

    const KnnGraph knn = exact_knn(data, params.n_neighbors, params.metric);
    const SmoothKnn smooth = smooth_knn_distances(knn);
    std::vector<Edge> edges = fuzzy_simplicial_set(knn, smooth);
    const Kernel kernel = fit_kernel(params.spread, params.min_dist);
    const double a = kernel.a;
    const double b = kernel.b;
    const double n_epochs = static_cast<double>(params.n_epochs);

    double max_w = 0.0;
    for (const auto& e : edges) max_w = std::max(max_w, e.weight);
    std::erase_if(edges, [&](const Edge& e) { return e.weight < max_w / n_epochs; });

    Rng rng(params.seed);
    Matrix y(n, dim);
    for (double& v : y.data()) v = rng.uniform(-10.0, 10.0);
    for (std::size_t c = 0; c < dim; ++c) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < n; ++i) {
            lo = std::min(lo, y(i, c));
            hi = std::max(hi, y(i, c));
        }
        const double span = hi > lo ? hi - lo : 1.0;
        for (std::size_t i = 0; i < n; ++i) y(i, c) = 10.0 * (y(i, c) - lo) / span;
    }

    const std::size_t m = edges.size();
    std::vector<double> epochs_per_sample(m), next_sample(m), epochs_per_negative(m), next_negative(m);
    const double neg_rate = static_cast<double>(params.negative_sample_rate);
    for (std::size_t e = 0; e < m; ++e) {
        epochs_per_sample[e] = max_w / edges[e].weight;
        next_sample[e] = epochs_per_sample[e];
        epochs_per_negative[e] = epochs_per_sample[e] / neg_rate;
        next_negative[e] = epochs_per_negative[e];
    }

    double alpha = params.learning_rate;
    std::vector<double> delta(dim);
    for (std::size_t epoch = 0; epoch < params.n_epochs; ++epoch) {
        const double now = static_cast<double>(epoch);
        for (std::size_t e = 0; e < m; ++e) {
            if (next_sample[e] > now) continue;
            const std::size_t j = edges[e].head;
            const std::size_t k = edges[e].tail;
            auto current = y.row(j);
            auto other = y.row(k);

            double dist_sq = squared_euclidean(current, other);
            double grad = 0.0;
            if (dist_sq > 0.0) {
                grad = -2.0 * a * b * std::pow(dist_sq, b - 1.0) / (a * std::pow(dist_sq, b) + 1.0);
            }
            for (std::size_t d = 0; d < dim; ++d) {
                const double g = clip(grad * (current[d] - other[d]));
                current[d] += g * alpha;
                other[d] -= g * alpha;
            }
            next_sample[e] += epochs_per_sample[e];

            const auto n_neg = static_cast<std::size_t>(std::max(0.0, (now - next_negative[e]) / epochs_per_negative[e]));
            for (std::size_t p = 0; p < n_neg; ++p) {
                const std::size_t r = rng.below(n);
                auto negative = y.row(r);
                dist_sq = squared_euclidean(current, negative);
                if (dist_sq > 0.0) {
                    grad = 2.0 * params.repulsion_strength * b /
                           ((0.001 + dist_sq) * (a * std::pow(dist_sq, b) + 1.0));
                } else if (r == j) {
                    continue;
                } else {
                    grad = 0.0;
                }
                for (std::size_t d = 0; d < dim; ++d) {
                    const double g = grad > 0.0 ? clip(grad * (current[d] - negative[d])) : 0.0;
                    current[d] += g * alpha;
                }
            }
            next_negative[e] += static_cast<double>(n_neg) * epochs_per_negative[e];
        }
        alpha = params.learning_rate * (1.0 - (now + 1.0) / n_epochs);
    }
    return y;
}

double trustworthiness(const Matrix& high, const Matrix& low, std::size_t k, Metric high_metric) {
    const std::size_t n = high.rows();
    if (low.rows() != n) throw std::invalid_argument("trustworthiness: row count mismatch");
    if (k == 0 || 2 * k >= n) throw std::invalid_argument("trustworthiness: need 0 < k < n / 2");
    const Prepared prepared = prepare(high, high_metric);
    const Prepared none;

    double penalty = 0.0;
    std::vector<std::size_t> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto hr = ranked_row(high, prepared, i, high_metric);
        std::sort(hr.begin(), hr.end());
        for (std::size_t r = 0; r < hr.size(); ++r) rank[hr[r].second] = r + 1;
        auto lr = ranked_row(low, none, i, Metric::euclidean);
        std::partial_sort(lr.begin(), lr.begin() + static_cast<std::ptrdiff_t>(k), lr.end());
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t rk = rank[lr[r].second];
            if (rk > k) penalty += static_cast<double>(rk - k);
        }
    }
    const double nd = static_cast<double>(n), kd = static_cast<double>(k);
    return 1.0 - 2.0 / (nd * kd * (2.0 * nd - 3.0 * kd - 1.0)) * penalty;
}

}  // namespace codetopics::umap
