#include "mimvc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mimvc/error.hpp"

namespace mimvc {

Matrix adaptive_neighbor_weights(const Matrix& points, int k) {
    const Eigen::Index m = points.rows();
    if (k < 1) throw std::invalid_argument("adaptive_knn_graph: k must be >= 1");
    if (static_cast<Eigen::Index>(k) >= m)
        throw std::invalid_argument("adaptive_knn_graph: k=" + std::to_string(k) +
                                    " needs more than k samples, got " + std::to_string(m));
    if (!points.allFinite()) throw std::invalid_argument("adaptive_knn_graph: non-finite input");

    Matrix w = Matrix::Zero(m, m);
    std::vector<double> dist(static_cast<std::size_t>(m));
    std::vector<Eigen::Index> order;
    order.reserve(static_cast<std::size_t>(m));
    const auto kk = static_cast<std::size_t>(k);

    for (Eigen::Index i = 0; i < m; ++i) {
        order.clear();
        for (Eigen::Index j = 0; j < m; ++j) {
            if (j == i) continue;
            dist[j] = (points.row(i) - points.row(j)).squaredNorm();
            order.push_back(j);
        }
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk + 1),
                          order.end(), [&](Eigen::Index a, Eigen::Index b) {
                              return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                          });
        const double boundary = dist[order[kk]];
        double head = 0.0;
        for (std::size_t h = 0; h < kk; ++h) head += dist[order[h]];
        const double denom = static_cast<double>(k) * boundary - head;
        const double scale = static_cast<double>(k) * boundary;
        if (!(denom > std::numeric_limits<double>::epsilon() * scale) || denom <= 0.0) {
            for (std::size_t h = 0; h < kk; ++h) w(i, order[h]) = 1.0 / k;
        } else {
            for (std::size_t h = 0; h < kk; ++h)
                w(i, order[h]) = (boundary - dist[order[h]]) / denom;
        }
    }
    return w;
}

NeighborGraph adaptive_knn_graph(const Matrix& points, int k) {
    const Matrix w = adaptive_neighbor_weights(points, k);
    NeighborGraph g;
    g.weights = 0.5 * (w + w.transpose());
    g.k = k;
    return g;
}

Matrix gcn_normalize(const Matrix& adjacency) {
    if (adjacency.rows() != adjacency.cols())
        throw std::invalid_argument("gcn_normalize: adjacency must be square");
    Matrix a = adjacency;
    a.diagonal().array() += 1.0;
    const Vector inv_sqrt = a.rowwise().sum().array().rsqrt();
    return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

SparseMatrix gcn_normalize_sparse(const Matrix& adjacency) {
    const Matrix dense = gcn_normalize(adjacency);
    return dense.sparseView(1.0, 0.0);
}

Matrix lift_graph(const Matrix& graph, const IndexList& observed, Eigen::Index n) {
    const auto m = static_cast<Eigen::Index>(observed.size());
    if (graph.rows() != m || graph.cols() != m)
        throw std::invalid_argument("lift_graph: graph is " + std::to_string(graph.rows()) + "x" +
                                    std::to_string(graph.cols()) + " but " + std::to_string(m) +
                                    " samples are observed");
    Matrix out = Matrix::Zero(n, n);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) out(observed[a], observed[b]) = graph(a, b);
    return out;
}

Matrix restrict_graph(const Matrix& global, const IndexList& observed) {
    const auto m = static_cast<Eigen::Index>(observed.size());
    Matrix out(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) out(a, b) = global(observed[a], observed[b]);
    return out;
}

Matrix fuse_graphs(const std::vector<Matrix>& lifted, const Mask& mask, const Matrix& common) {
    const Eigen::Index n = common.rows();
    if (common.cols() != n) throw std::invalid_argument("fuse_graphs: S must be square");
    if (mask.rows() != n || mask.cols() != static_cast<Eigen::Index>(lifted.size()))
        throw std::invalid_argument("fuse_graphs: mask shape does not match graphs");
    for (const auto& g : lifted)
        if (g.rows() != n || g.cols() != n)
            throw std::invalid_argument("fuse_graphs: lifted graph shape mismatch");

    const auto views = static_cast<Eigen::Index>(lifted.size());
    Matrix out(n, n);
    // Column-major traversal: j outer.
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double num = 0.0;
            double den = 0.0;
            for (Eigen::Index v = 0; v < views; ++v) {
                if (mask(i, v) && mask(j, v)) {
                    num += lifted[v](i, j);
                    den += 1.0;
                }
            }
            out(i, j) = (num + common(i, j)) / (den + 1.0);
        }
        out(j, j) = 0.0;
    }
    return out;
}

Matrix fuse_graphs_unmasked(const std::vector<Matrix>& lifted, const Matrix& common) {
    const Eigen::Index n = common.rows();
    Matrix sum = Matrix::Zero(n, n);
    for (const auto& g : lifted) {
        if (g.rows() != n || g.cols() != n)
            throw std::invalid_argument("fuse_graphs: lifted graph shape mismatch");
        sum += g;
    }
    sum += common;
    Matrix out = sum / static_cast<double>(lifted.size() + 1);
    out.diagonal().setZero();
    return out;
}

void write_graph_coo(const Matrix& graph, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    out << "i,j,weight\n";
    char buf[32];
    for (Eigen::Index i = 0; i < graph.rows(); ++i)
        for (Eigen::Index j = 0; j < graph.cols(); ++j)
            if (graph(i, j) != 0.0) {
                std::snprintf(buf, sizeof buf, "%.17g", graph(i, j));
                out << i << ',' << j << ',' << buf << '\n';
            }
}

}  // namespace mimvc
