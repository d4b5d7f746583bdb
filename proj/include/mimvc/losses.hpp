#pragma once

#include "mimvc/dataset.hpp"

#include <string>
#include <vector>

namespace mimvc {

enum class ContrastiveKind { wcl, dcl, cl, none };

struct LossConfig {
    double lambda = 1.0;
    double tau = 1.0;
    double eps = 1e-12;
    ContrastiveKind variant = ContrastiveKind::wcl;
    // Keep the i == j self pair inside both sums of the weighted loss.
    bool literal_eq14 = false;

    void validate() const;
};

/// (1/n) * sum over views and observed rows of the squared row residual.
/// `n` is the global sample count. When `grads` is given it receives
/// d(loss)/d(reconstruction) per view.
double reconstruction_loss(const std::vector<Matrix>& originals,
                           const std::vector<Matrix>& reconstructions, Eigen::Index n,
                           std::vector<Matrix>* grads = nullptr);

/// Graph re-weighted contrastive loss on cosine similarities of the rows of
/// `y`. Pair (i, j) counts as positive with weight a_ij and as negative with
/// weight 1 - a_ij; numerator and denominator are stabilized by `eps`.
/// Self pairs are excluded unless `include_self`.
double weighted_contrastive_loss(const Matrix& y, const Matrix& graph, double tau, double eps,
                                 bool include_self = false, Matrix* grad = nullptr);

/// Binary version: positives are j != i with a_ij > 0, negatives the rest;
/// positives never enter the denominator. Samples lacking a positive or a
/// negative are dropped and the mean is taken over the remaining ones.
double decoupled_contrastive_loss(const Matrix& y, const Matrix& graph, double tau,
                                  Matrix* grad = nullptr);

/// InfoNCE with positives in the numerator and positives plus negatives in
/// the denominator. Same positive/negative split and skip rule as above.
double standard_contrastive_loss(const Matrix& y, const Matrix& graph, double tau,
                                 Matrix* grad = nullptr);

/// Dispatch on cfg.variant; `none` returns 0 with a zero gradient.
double contrastive_loss(const LossConfig& cfg, const Matrix& y, const Matrix& graph,
                        Matrix* grad = nullptr);

/// rec + lambda * contrastive; throws TrainingError on non-finite input.
double total_loss(double reconstruction, double contrastive, double lambda);

std::string to_string(ContrastiveKind kind);
ContrastiveKind contrastive_kind_from_string(const std::string& s);

}  // namespace mimvc
