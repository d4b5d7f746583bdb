#pragma once

#include "mimvc/dataset.hpp"

#include <Eigen/SparseCore>

#include <filesystem>

namespace mimvc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Symmetric adaptive-neighbor similarity graph over a set of M samples.
/// Weights lie in [0, 1] with a zero diagonal.
struct NeighborGraph {
    Matrix weights;
    int k = 0;
};

/// Row-wise closed-form adaptive neighbor assignment before symmetrization.
/// Row i gives its k nearest neighbors (squared Euclidean) the weights
///   (d_(k+1) - d_j) / (k d_(k+1) - sum_h d_(h))
/// and everything else 0, so each row sums to 1. A degenerate denominator
/// (all k+1 distances equal) yields 1/k for each of the k nearest.
/// Ties in distance are broken by the lower sample index.
Matrix adaptive_neighbor_weights(const Matrix& points, int k);

/// adaptive_neighbor_weights followed by (W + W^T) / 2.
NeighborGraph adaptive_knn_graph(const Matrix& points, int k);

/// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
Matrix gcn_normalize(const Matrix& adjacency);
SparseMatrix gcn_normalize_sparse(const Matrix& adjacency);

/// Scatters a graph over the observed samples of one view into the global
/// N x N index space; rows and columns of missing samples stay zero.
Matrix lift_graph(const Matrix& graph, const IndexList& observed, Eigen::Index n);

/// Inverse of lift_graph: restricts a global graph to the observed samples.
Matrix restrict_graph(const Matrix& global, const IndexList& observed);

/// Mask-informed fusion of lifted per-view graphs with the common graph S:
///   a_ij = (sum_v m_iv m_jv a^v_ij + s_ij) / (sum_v m_iv m_jv + 1)
/// The pairwise masks m_iv m_jv are evaluated on the fly, never stored.
/// The diagonal is forced to zero.
Matrix fuse_graphs(const std::vector<Matrix>& lifted, const Mask& mask, const Matrix& common);

/// Plain mean of all lifted graphs and S (mask ignored).
Matrix fuse_graphs_unmasked(const std::vector<Matrix>& lifted, const Matrix& common);

/// Coordinate-list export (i,j,weight) of the non-zero entries.
void write_graph_coo(const Matrix& graph, const std::filesystem::path& file);

}  // namespace mimvc
