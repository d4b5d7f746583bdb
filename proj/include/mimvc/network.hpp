#pragma once

#include "mimvc/dataset.hpp"
#include "mimvc/graph.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mimvc {

enum class Activation { relu, none };

/// One affine layer. `bias` is a 1 x out row.
struct Dense {
    Matrix weight;
    Matrix bias;

    Eigen::Index in_dim() const { return weight.rows(); }
    Eigen::Index out_dim() const { return weight.cols(); }
};

using LayerStack = std::array<Dense, 3>;

struct ModelShape {
    std::vector<Eigen::Index> view_dims;
    Eigen::Index hidden1 = 196;
    Eigen::Index hidden2 = 128;
    Eigen::Index latent = 64;
    Eigen::Index clusters = 2;
    bool use_bias = true;
};

/// All trainable parameters: per-view GCN encoders (D-196-128-64), per-view
/// fully connected decoders (64-128-196-D) and the cluster projection (64-C).
struct Model {
    std::vector<LayerStack> encoders;
    std::vector<LayerStack> decoders;
    Dense projection;
    bool use_bias = true;

    std::size_t num_views() const { return encoders.size(); }
};

/// Glorot-uniform weights, zero biases.
Model init_model(const ModelShape& shape, std::uint64_t seed);

/// Same shapes as `m`, all zeros.
Model zeros_like(const Model& m);

/// Stable flat enumeration of every parameter tensor.
std::vector<Matrix*> parameter_tensors(Model& m);
std::vector<const Matrix*> parameter_tensors(const Model& m);
std::vector<std::string> parameter_names(const Model& m);

bool all_finite(const Model& m);

// ---------------------------------------------------------------------------
// Layers

Matrix gcn_layer(const Matrix& h, const Matrix& a_norm, const Dense& layer, Activation act);
Matrix gcn_layer(const Matrix& h, const SparseMatrix& a_norm, const Dense& layer, Activation act);

struct StackCache {
    std::array<Matrix, 3> inputs;  // layer input (after propagation for GCN layers)
    std::array<Matrix, 3> outputs;

    const Matrix& output() const { return outputs[2]; }
};

/// Three GCN layers (relu, relu, none) over the observed rows of one view.
StackCache encode_view(const Matrix& observed, const SparseMatrix& a_norm, const LayerStack& enc);

/// Accumulates parameter gradients into `grad`, returns d(observed).
Matrix encode_view_backward(const StackCache& cache, const SparseMatrix& a_norm,
                            const LayerStack& enc, const Matrix& d_out, LayerStack& grad);

/// Three fully connected layers (relu, relu, none).
StackCache decode_view(const Matrix& fused_observed, const LayerStack& dec);

Matrix decode_view_backward(const StackCache& cache, const LayerStack& dec, const Matrix& d_out,
                            LayerStack& grad);

// ---------------------------------------------------------------------------
// Fusion

/// f_i = sum_v m_iv h^v_i / sum_v m_iv, with h^v_i the latent row of sample i
/// in view v. Latents carry only observed rows; they are addressed through
/// `part`.
Matrix fuse_features(const std::vector<Matrix>& latents, const ObservedPartition& part,
                     const Mask& mask);

/// d(latents) for fuse_features given dF.
std::vector<Matrix> fuse_features_backward(const Matrix& d_fused, const ObservedPartition& part,
                                           const Mask& mask);

/// Ablation: missing latents zero-filled, then a plain mean over all V views.
Matrix fuse_features_unmasked(const std::vector<Matrix>& latents, const ObservedPartition& part,
                              Eigen::Index n);

std::vector<Matrix> fuse_features_unmasked_backward(const Matrix& d_fused,
                                                    const ObservedPartition& part);

// ---------------------------------------------------------------------------
// Cluster projection

struct ProjectionCache {
    Matrix logits;  // F W + b
    Matrix q;       // Y, N x C, orthonormal columns
    Matrix r;       // C x C upper triangular, positive diagonal
};

/// Linear layer followed by a thin QR factorization normalized so that R has
/// a positive diagonal. Throws DegenerateProjection if any |R_cc| < 1e-10.
ProjectionCache project_clusters(const Matrix& fused, const Dense& proj);

/// Back-propagates dY through the QR factorization and the linear layer.
/// Accumulates into `grad`, returns dF.
Matrix project_clusters_backward(const ProjectionCache& cache, const Matrix& fused,
                                 const Dense& proj, const Matrix& d_y, Dense& grad);

/// Gradient of the thin-QR Q factor: given dQ returns dA for A = QR.
Matrix qr_backward(const Matrix& q, const Matrix& r, const Matrix& d_q);

}  // namespace mimvc
