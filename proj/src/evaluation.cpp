#include "mimvc/evaluation.hpp"

#include "mimvc/error.hpp"
#include "mimvc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace mimvc {

namespace {

// Relabels to 0..K-1 in order of first appearance of sorted values.
std::vector<int> compact(const std::vector<int>& labels, int& count) {
    std::map<int, int> ids;
    for (int x : labels) ids.emplace(x, 0);
    count = 0;
    for (auto& [value, id] : ids) id = count++;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int x : labels) out.push_back(ids[x]);
    return out;
}

struct Contingency {
    Eigen::MatrixXd table;  // pred x truth counts
    Eigen::VectorXd pred_sizes;
    Eigen::VectorXd truth_sizes;
    double n = 0.0;
};

Contingency contingency(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("metrics: prediction and truth lengths differ (" +
                                    std::to_string(pred.size()) + " vs " +
                                    std::to_string(truth.size()) + ")");
    if (pred.empty()) throw std::invalid_argument("metrics: empty partitions");
    int kp = 0, kt = 0;
    const auto p = compact(pred, kp);
    const auto t = compact(truth, kt);
    Contingency c;
    c.table = Eigen::MatrixXd::Zero(kp, kt);
    for (std::size_t i = 0; i < p.size(); ++i) c.table(p[i], t[i]) += 1.0;
    c.pred_sizes = c.table.rowwise().sum();
    c.truth_sizes = c.table.colwise().sum().transpose();
    c.n = static_cast<double>(pred.size());
    return c;
}

double pairs(double x) { return 0.5 * x * (x - 1.0); }

double entropy(const Eigen::VectorXd& sizes, double n) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < sizes.size(); ++i)
        if (sizes(i) > 0.0) {
            const double p = sizes(i) / n;
            h -= p * std::log(p);
        }
    return h;
}

Matrix kmeanspp_init(const Matrix& points, int clusters, Rng& rng) {
    const Eigen::Index n = points.rows();
    Matrix centroids(clusters, points.cols());
    centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    Vector nearest(n);
    for (Eigen::Index i = 0; i < n; ++i) nearest(i) = (points.row(i) - centroids.row(0)).squaredNorm();
    for (int c = 1; c < clusters; ++c) {
        const double total = nearest.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += nearest(i);
                if (acc > target && nearest(i) > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        }
        centroids.row(c) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            nearest(i) = std::min(nearest(i), (points.row(i) - centroids.row(c)).squaredNorm());
    }
    return centroids;
}

double assign(const Matrix& points, const Matrix& centroids, std::vector<int>& labels,
              Vector& dist) {
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
            const double d = (points.row(i) - centroids.row(c)).squaredNorm();
            if (d < best) {
                best = d;
                arg = static_cast<int>(c);
            }
        }
        labels[i] = arg;
        dist(i) = best;
        inertia += best;
    }
    return inertia;
}

}  // namespace

KMeansResult lloyd(const Matrix& points, Matrix centroids, const KMeansOptions& opts) {
    const Eigen::Index n = points.rows();
    const Eigen::Index k = centroids.rows();
    KMeansResult res;
    res.labels.assign(static_cast<std::size_t>(n), 0);
    Vector dist(n);
    for (int it = 0; it < opts.max_iterations; ++it) {
        assign(points, centroids, res.labels, dist);
        Matrix updated = Matrix::Zero(k, points.cols());
        Vector counts = Vector::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            updated.row(res.labels[i]) += points.row(i);
            counts(res.labels[i]) += 1.0;
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts(c) > 0.0) {
                updated.row(c) /= counts(c);
            } else {
                Eigen::Index far = 0;
                dist.maxCoeff(&far);
                updated.row(c) = points.row(far);
                dist(far) = 0.0;
            }
        }
        const double shift = (updated - centroids).rowwise().norm().maxCoeff();
        centroids = std::move(updated);
        res.iterations = it + 1;
        if (shift < opts.tolerance) break;
    }
    res.inertia = assign(points, centroids, res.labels, dist);
    res.centroids = std::move(centroids);
    return res;
}

KMeansResult kmeans(const Matrix& points, int clusters, std::uint64_t seed,
                    const KMeansOptions& opts) {
    if (clusters < 1) throw std::invalid_argument("kmeans: clusters must be >= 1");
    if (points.rows() < clusters)
        throw std::invalid_argument("kmeans: need at least as many points as clusters");
    if (!points.allFinite()) throw std::invalid_argument("kmeans: non-finite input");
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    const int restarts = std::max(1, opts.restarts);
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        auto res = lloyd(points, kmeanspp_init(points, clusters, rng), opts);
        if (res.inertia < best.inertia) best = std::move(res);
    }
    return best;
}

std::vector<int> hungarian_assignment(const Matrix& cost) {
    const Eigen::Index n = cost.rows();
    if (cost.cols() != n) throw std::invalid_argument("hungarian_assignment: cost must be square");
    const double inf = std::numeric_limits<double>::infinity();
    // Potentials method, 1-based with a virtual column 0.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<Eigen::Index> match(n + 1, 0), way(n + 1, 0);
    std::vector<bool> used(n + 1);
    for (Eigen::Index i = 1; i <= n; ++i) {
        match[0] = i;
        Eigen::Index j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), false);
        do {
            used[j0] = true;
            const Eigen::Index i0 = match[j0];
            double delta = inf;
            Eigen::Index j1 = 0;
            for (Eigen::Index j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (Eigen::Index j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const Eigen::Index j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n));
    for (Eigen::Index j = 1; j <= n; ++j) row_to_col[match[j] - 1] = static_cast<int>(j - 1);
    return row_to_col;
}

double accuracy_hungarian(const std::vector<int>& pred, const std::vector<int>& truth) {
    const auto c = contingency(pred, truth);
    const Eigen::Index k = std::max(c.table.rows(), c.table.cols());
    Matrix cost = Matrix::Zero(k, k);
    cost.topLeftCorner(c.table.rows(), c.table.cols()) = -c.table;
    const auto match = hungarian_assignment(cost);
    double hits = 0.0;
    for (Eigen::Index r = 0; r < c.table.rows(); ++r)
        if (match[r] < c.table.cols()) hits += c.table(r, match[r]);
    return hits / c.n;
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
    const auto c = contingency(pred, truth);
    const double hp = entropy(c.pred_sizes, c.n);
    const double ht = entropy(c.truth_sizes, c.n);
    if (hp <= 0.0 || ht <= 0.0) return 0.0;
    double mi = 0.0;
    for (Eigen::Index a = 0; a < c.table.rows(); ++a)
        for (Eigen::Index b = 0; b < c.table.cols(); ++b) {
            const double nab = c.table(a, b);
            if (nab > 0.0)
                mi += nab / c.n * std::log(c.n * nab / (c.pred_sizes(a) * c.truth_sizes(b)));
        }
    return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
    const auto c = contingency(pred, truth);
    double index = 0.0;
    for (Eigen::Index a = 0; a < c.table.rows(); ++a)
        for (Eigen::Index b = 0; b < c.table.cols(); ++b) index += pairs(c.table(a, b));
    double sum_pred = 0.0, sum_truth = 0.0;
    for (Eigen::Index a = 0; a < c.pred_sizes.size(); ++a) sum_pred += pairs(c.pred_sizes(a));
    for (Eigen::Index b = 0; b < c.truth_sizes.size(); ++b) sum_truth += pairs(c.truth_sizes(b));
    const double total = pairs(c.n);
    if (total == 0.0) return 1.0;
    const double expected = sum_pred * sum_truth / total;
    const double max_index = 0.5 * (sum_pred + sum_truth);
    // Both partitions trivial in the same way (all singletons or one block).
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

double pairwise_fscore(const std::vector<int>& pred, const std::vector<int>& truth) {
    const auto c = contingency(pred, truth);
    double tp = 0.0;
    for (Eigen::Index a = 0; a < c.table.rows(); ++a)
        for (Eigen::Index b = 0; b < c.table.cols(); ++b) tp += pairs(c.table(a, b));
    if (tp == 0.0) return 0.0;
    double pred_pos = 0.0, truth_pos = 0.0;
    for (Eigen::Index a = 0; a < c.pred_sizes.size(); ++a) pred_pos += pairs(c.pred_sizes(a));
    for (Eigen::Index b = 0; b < c.truth_sizes.size(); ++b) truth_pos += pairs(c.truth_sizes(b));
    const double precision = tp / pred_pos;
    const double recall = tp / truth_pos;
    return 2.0 * precision * recall / (precision + recall);
}

MetricsRecord score_partition(const std::vector<int>& pred, const std::vector<int>& truth) {
    MetricsRecord m;
    m.acc = accuracy_hungarian(pred, truth);
    m.nmi = nmi(pred, truth);
    m.ari = ari(pred, truth);
    m.fscore = pairwise_fscore(pred, truth);
    return m;
}

MetricsRecord evaluate(const Matrix& embedding, const std::vector<int>& labels, int clusters,
                       const std::vector<std::uint64_t>& seeds, const KMeansOptions& opts) {
    if (labels.empty()) throw DataError("evaluate: ground-truth labels are required");
    if (static_cast<Eigen::Index>(labels.size()) != embedding.rows())
        throw std::invalid_argument("evaluate: label count differs from embedding rows");
    if (seeds.empty()) throw std::invalid_argument("evaluate: at least one seed required");
    MetricsRecord mean;
    for (auto seed : seeds) {
        const auto km = kmeans(embedding, clusters, seed, opts);
        const auto s = score_partition(km.labels, labels);
        mean.acc += s.acc;
        mean.nmi += s.nmi;
        mean.ari += s.ari;
        mean.fscore += s.fscore;
    }
    const double k = static_cast<double>(seeds.size());
    mean.acc /= k;
    mean.nmi /= k;
    mean.ari /= k;
    mean.fscore /= k;
    mean.seed = seeds.front();
    return mean;
}

const char* const kMetricsHeader = "variant,eta,lambda,seed,epoch,acc,nmi,ari,fscore";

void write_metrics_row(std::ostream& out, const MetricsRecord& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%llu,%d,%.17g,%.17g,%.17g,%.17g\n",
                  m.variant.c_str(), m.eta, m.lambda, static_cast<unsigned long long>(m.seed),
                  m.epoch, m.acc, m.nmi, m.ari, m.fscore);
    out << buf;
}

}  // namespace mimvc
