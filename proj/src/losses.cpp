#include "mimvc/losses.hpp"

#include "mimvc/error.hpp"

#include <cmath>
#include <stdexcept>

namespace mimvc {

namespace {

struct CosineTerms {
    Matrix unit;    // row-normalized y
    Vector norms;
    Matrix expsim;  // exp(cos(y_i, y_j) / tau)
};

CosineTerms cosine_terms(const Matrix& y, double tau) {
    CosineTerms t;
    t.norms = y.rowwise().norm();
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        if (!(t.norms(i) > 0.0))
            throw std::invalid_argument("contrastive loss: row " + std::to_string(i) +
                                        " of Y has zero norm");
    t.unit = t.norms.cwiseInverse().asDiagonal() * y;
    t.expsim = ((t.unit * t.unit.transpose()).array() / tau).exp().matrix();
    return t;
}

// Turns d(loss)/d(sim_ij) into d(loss)/d(y).
Matrix similarity_backward(const CosineTerms& t, const Matrix& d_sim) {
    const Matrix d_unit = (d_sim + d_sim.transpose()) * t.unit;
    Matrix d_y(d_unit.rows(), d_unit.cols());
    for (Eigen::Index i = 0; i < d_unit.rows(); ++i) {
        const double radial = d_unit.row(i).dot(t.unit.row(i));
        d_y.row(i) = (d_unit.row(i) - radial * t.unit.row(i)) / t.norms(i);
    }
    return d_y;
}

void check_graph(const Matrix& y, const Matrix& graph) {
    if (graph.rows() != y.rows() || graph.cols() != y.rows())
        throw std::invalid_argument("contrastive loss: graph must be N x N for N rows of Y");
}

enum class BinaryForm { decoupled, standard };

double binary_contrastive(const Matrix& y, const Matrix& graph, double tau, BinaryForm form,
                          Matrix* grad) {
    check_graph(y, graph);
    const Eigen::Index n = y.rows();
    const auto t = cosine_terms(y, tau);

    Matrix d_sim;
    if (grad) d_sim = Matrix::Zero(n, n);
    double total = 0.0;
    Eigen::Index kept = 0;
    std::vector<double> pos_sum(static_cast<std::size_t>(n)), neg_sum(static_cast<std::size_t>(n));
    std::vector<bool> keep(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        double pos = 0.0, neg = 0.0;
        int npos = 0, nneg = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            if (graph(i, j) > 0.0) {
                pos += t.expsim(i, j);
                ++npos;
            } else {
                neg += t.expsim(i, j);
                ++nneg;
            }
        }
        pos_sum[i] = pos;
        neg_sum[i] = neg;
        const bool use = form == BinaryForm::decoupled ? (npos > 0 && nneg > 0) : npos > 0;
        keep[i] = use;
        if (!use) continue;
        ++kept;
        const double denom = form == BinaryForm::decoupled ? neg : pos + neg;
        total += -(std::log(pos) - std::log(denom));
    }
    if (kept == 0) {
        if (grad) *grad = Matrix::Zero(y.rows(), y.cols());
        return 0.0;
    }
    const double scale = 1.0 / static_cast<double>(kept);
    if (grad) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!keep[i]) continue;
            const double denom =
                form == BinaryForm::decoupled ? neg_sum[i] : pos_sum[i] + neg_sum[i];
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                const double e = t.expsim(i, j) / tau;
                const bool positive = graph(i, j) > 0.0;
                double g = 0.0;
                if (positive) {
                    g -= e / pos_sum[i];
                    if (form == BinaryForm::standard) g += e / denom;
                } else {
                    g += e / denom;
                }
                d_sim(i, j) = scale * g;
            }
        }
        *grad = similarity_backward(t, d_sim);
    }
    return total * scale;
}

}  // namespace

void LossConfig::validate() const {
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
}

double reconstruction_loss(const std::vector<Matrix>& originals,
                           const std::vector<Matrix>& reconstructions, Eigen::Index n,
                           std::vector<Matrix>* grads) {
    if (originals.size() != reconstructions.size())
        throw std::invalid_argument("reconstruction_loss: view count mismatch");
    if (n < 1) throw std::invalid_argument("reconstruction_loss: n must be positive");
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    if (grads) grads->clear();
    for (std::size_t v = 0; v < originals.size(); ++v) {
        if (originals[v].rows() != reconstructions[v].rows() ||
            originals[v].cols() != reconstructions[v].cols())
            throw std::invalid_argument("reconstruction_loss: shape mismatch in view " +
                                        std::to_string(v));
        const Matrix residual = reconstructions[v] - originals[v];
        total += residual.squaredNorm();
        if (grads) grads->push_back(2.0 * inv_n * residual);
    }
    return total * inv_n;
}

double weighted_contrastive_loss(const Matrix& y, const Matrix& graph, double tau, double eps,
                                 bool include_self, Matrix* grad) {
    check_graph(y, graph);
    const Eigen::Index n = y.rows();
    const auto t = cosine_terms(y, tau);
    const double inv_n = 1.0 / static_cast<double>(n);

    Vector pos(n), neg(n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double p = 0.0, q = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i && !include_self) continue;
            p += graph(i, j) * t.expsim(i, j);
            q += (1.0 - graph(i, j)) * t.expsim(i, j);
        }
        pos(i) = p + eps;
        neg(i) = q + eps;
        total += -(std::log(pos(i)) - std::log(neg(i)));
    }
    if (grad) {
        Matrix d_sim = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i && !include_self) continue;
                const double e = t.expsim(i, j) / tau;
                d_sim(i, j) = inv_n * (-graph(i, j) * e / pos(i) + (1.0 - graph(i, j)) * e / neg(i));
            }
        *grad = similarity_backward(t, d_sim);
    }
    return total * inv_n;
}

double decoupled_contrastive_loss(const Matrix& y, const Matrix& graph, double tau, Matrix* grad) {
    return binary_contrastive(y, graph, tau, BinaryForm::decoupled, grad);
}

double standard_contrastive_loss(const Matrix& y, const Matrix& graph, double tau, Matrix* grad) {
    return binary_contrastive(y, graph, tau, BinaryForm::standard, grad);
}

double contrastive_loss(const LossConfig& cfg, const Matrix& y, const Matrix& graph, Matrix* grad) {
    switch (cfg.variant) {
    case ContrastiveKind::wcl:
        return weighted_contrastive_loss(y, graph, cfg.tau, cfg.eps, cfg.literal_eq14, grad);
    case ContrastiveKind::dcl:
        return decoupled_contrastive_loss(y, graph, cfg.tau, grad);
    case ContrastiveKind::cl:
        return standard_contrastive_loss(y, graph, cfg.tau, grad);
    case ContrastiveKind::none:
        break;
    }
    if (grad) *grad = Matrix::Zero(y.rows(), y.cols());
    return 0.0;
}

double total_loss(double reconstruction, double contrastive, double lambda) {
    if (!std::isfinite(reconstruction) || !std::isfinite(contrastive) || !std::isfinite(lambda))
        throw TrainingError("total_loss: non-finite component (rec=" +
                            std::to_string(reconstruction) +
                            ", contrastive=" + std::to_string(contrastive) + ")");
    return reconstruction + lambda * contrastive;
}

std::string to_string(ContrastiveKind kind) {
    switch (kind) {
    case ContrastiveKind::wcl: return "wcl";
    case ContrastiveKind::dcl: return "dcl";
    case ContrastiveKind::cl: return "cl";
    case ContrastiveKind::none: return "none";
    }
    return "none";
}

ContrastiveKind contrastive_kind_from_string(const std::string& s) {
    if (s == "wcl") return ContrastiveKind::wcl;
    if (s == "dcl") return ContrastiveKind::dcl;
    if (s == "cl") return ContrastiveKind::cl;
    if (s == "none") return ContrastiveKind::none;
    throw ConfigError("unknown contrastive variant '" + s + "'");
}

}  // namespace mimvc
