#include "mimvc/network.hpp"

#include "mimvc/error.hpp"
#include "mimvc/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mimvc {

namespace {

Dense glorot(Eigen::Index in, Eigen::Index out, Rng& rng) {
    Dense d;
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    d.weight.resize(in, out);
    for (Eigen::Index j = 0; j < out; ++j)
        for (Eigen::Index i = 0; i < in; ++i) d.weight(i, j) = rng.uniform(-a, a);
    d.bias = Matrix::Zero(1, out);
    return d;
}

void check_layer(const Matrix& h, const Dense& layer, const char* what) {
    if (h.cols() != layer.in_dim() || layer.bias.cols() != layer.out_dim() || layer.bias.rows() != 1)
        throw std::invalid_argument(std::string(what) + ": input has " + std::to_string(h.cols()) +
                                    " columns, layer expects " + std::to_string(layer.in_dim()));
}

Matrix affine(const Matrix& h, const Dense& layer, Activation act) {
    Matrix out = h * layer.weight;
    out.rowwise() += layer.bias.row(0);
    if (act == Activation::relu) out = out.cwiseMax(0.0);
    return out;
}

// d(pre-activation) from d(output).
Matrix activation_backward(const Matrix& out, const Matrix& d_out, Activation act) {
    if (act == Activation::none) return d_out;
    return (out.array() > 0.0).select(d_out, 0.0);
}

constexpr std::array<Activation, 3> kStackActivations{Activation::relu, Activation::relu,
                                                      Activation::none};

void accumulate(Dense& grad, const Matrix& input, const Matrix& d_pre) {
    grad.weight.noalias() += input.transpose() * d_pre;
    grad.bias += d_pre.colwise().sum();
}

}  // namespace

Model init_model(const ModelShape& shape, std::uint64_t seed) {
    if (shape.clusters < 1) throw std::invalid_argument("init_model: clusters must be >= 1");
    Model m;
    m.use_bias = shape.use_bias;
    Rng rng(seed);
    for (auto d : shape.view_dims) {
        m.encoders.push_back({glorot(d, shape.hidden1, rng), glorot(shape.hidden1, shape.hidden2, rng),
                              glorot(shape.hidden2, shape.latent, rng)});
        m.decoders.push_back({glorot(shape.latent, shape.hidden2, rng),
                              glorot(shape.hidden2, shape.hidden1, rng),
                              glorot(shape.hidden1, d, rng)});
    }
    m.projection = glorot(shape.latent, shape.clusters, rng);
    return m;
}

Model zeros_like(const Model& m) {
    Model z = m;
    for (auto* t : parameter_tensors(z)) t->setZero();
    return z;
}

std::vector<Matrix*> parameter_tensors(Model& m) {
    std::vector<Matrix*> out;
    for (std::size_t v = 0; v < m.encoders.size(); ++v) {
        for (auto& l : m.encoders[v]) {
            out.push_back(&l.weight);
            out.push_back(&l.bias);
        }
        for (auto& l : m.decoders[v]) {
            out.push_back(&l.weight);
            out.push_back(&l.bias);
        }
    }
    out.push_back(&m.projection.weight);
    out.push_back(&m.projection.bias);
    return out;
}

std::vector<const Matrix*> parameter_tensors(const Model& m) {
    auto mut = parameter_tensors(const_cast<Model&>(m));
    return {mut.begin(), mut.end()};
}

std::vector<std::string> parameter_names(const Model& m) {
    std::vector<std::string> names;
    for (std::size_t v = 0; v < m.encoders.size(); ++v) {
        for (const char* part : {"encoder", "decoder"})
            for (int l = 0; l < 3; ++l)
                for (const char* kind : {"weight", "bias"})
                    names.push_back("view" + std::to_string(v) + "." + part + std::to_string(l) +
                                    "." + kind);
    }
    names.push_back("projection.weight");
    names.push_back("projection.bias");
    return names;
}

bool all_finite(const Model& m) {
    for (const auto* t : parameter_tensors(m))
        if (!t->allFinite()) return false;
    return true;
}

Matrix gcn_layer(const Matrix& h, const Matrix& a_norm, const Dense& layer, Activation act) {
    check_layer(h, layer, "gcn_layer");
    if (a_norm.rows() != h.rows() || a_norm.cols() != h.rows())
        throw std::invalid_argument("gcn_layer: adjacency does not match row count");
    Matrix out = affine(a_norm * h, layer, act);
    if (!out.allFinite()) throw TrainingError("gcn_layer: non-finite output");
    return out;
}

Matrix gcn_layer(const Matrix& h, const SparseMatrix& a_norm, const Dense& layer, Activation act) {
    check_layer(h, layer, "gcn_layer");
    if (a_norm.rows() != h.rows() || a_norm.cols() != h.rows())
        throw std::invalid_argument("gcn_layer: adjacency does not match row count");
    Matrix propagated = a_norm * h;
    Matrix out = affine(propagated, layer, act);
    if (!out.allFinite()) throw TrainingError("gcn_layer: non-finite output");
    return out;
}

StackCache encode_view(const Matrix& observed, const SparseMatrix& a_norm, const LayerStack& enc) {
    if (a_norm.rows() != observed.rows())
        throw std::invalid_argument("encode_view: graph does not match observed rows");
    StackCache c;
    const Matrix* h = &observed;
    for (int l = 0; l < 3; ++l) {
        check_layer(*h, enc[l], "encode_view");
        c.inputs[l] = a_norm * (*h);
        c.outputs[l] = affine(c.inputs[l], enc[l], kStackActivations[l]);
        h = &c.outputs[l];
    }
    return c;
}

Matrix encode_view_backward(const StackCache& cache, const SparseMatrix& a_norm,
                            const LayerStack& enc, const Matrix& d_out, LayerStack& grad) {
    Matrix d = d_out;
    for (int l = 2; l >= 0; --l) {
        const Matrix d_pre = activation_backward(cache.outputs[l], d, kStackActivations[l]);
        accumulate(grad[l], cache.inputs[l], d_pre);
        const Matrix d_prop = d_pre * enc[l].weight.transpose();
        d = a_norm.transpose() * d_prop;
    }
    return d;
}

StackCache decode_view(const Matrix& fused_observed, const LayerStack& dec) {
    StackCache c;
    const Matrix* h = &fused_observed;
    for (int l = 0; l < 3; ++l) {
        check_layer(*h, dec[l], "decode_view");
        c.inputs[l] = *h;
        c.outputs[l] = affine(*h, dec[l], kStackActivations[l]);
        h = &c.outputs[l];
    }
    return c;
}

Matrix decode_view_backward(const StackCache& cache, const LayerStack& dec, const Matrix& d_out,
                            LayerStack& grad) {
    Matrix d = d_out;
    for (int l = 2; l >= 0; --l) {
        const Matrix d_pre = activation_backward(cache.outputs[l], d, kStackActivations[l]);
        accumulate(grad[l], cache.inputs[l], d_pre);
        d = d_pre * dec[l].weight.transpose();
    }
    return d;
}

Matrix fuse_features(const std::vector<Matrix>& latents, const ObservedPartition& part,
                     const Mask& mask) {
    const Eigen::Index n = mask.rows();
    if (latents.size() != part.views.size() || mask.cols() != static_cast<Eigen::Index>(latents.size()))
        throw std::invalid_argument("fuse_features: view count mismatch");
    if (latents.empty()) throw std::invalid_argument("fuse_features: no views");
    const Eigen::Index width = latents.front().cols();

    Matrix sum = Matrix::Zero(n, width);
    for (std::size_t v = 0; v < latents.size(); ++v) {
        const auto& obs = part.observed(v);
        if (latents[v].rows() != static_cast<Eigen::Index>(obs.size()) || latents[v].cols() != width)
            throw std::invalid_argument("fuse_features: latent shape does not match partition");
        for (std::size_t r = 0; r < obs.size(); ++r) sum.row(obs[r]) += latents[v].row(r);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        int count = 0;
        for (Eigen::Index v = 0; v < mask.cols(); ++v) count += mask(i, v);
        if (count == 0)
            throw DataError("fuse_features: sample " + std::to_string(i) + " is observed in no view");
        sum.row(i) /= static_cast<double>(count);
    }
    return sum;
}

std::vector<Matrix> fuse_features_backward(const Matrix& d_fused, const ObservedPartition& part,
                                           const Mask& mask) {
    std::vector<Matrix> out;
    out.reserve(part.views.size());
    Vector inv_count(mask.rows());
    for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        int count = 0;
        for (Eigen::Index v = 0; v < mask.cols(); ++v) count += mask(i, v);
        inv_count(i) = 1.0 / static_cast<double>(count);
    }
    for (std::size_t v = 0; v < part.views.size(); ++v) {
        const auto& obs = part.observed(v);
        Matrix d(static_cast<Eigen::Index>(obs.size()), d_fused.cols());
        for (std::size_t r = 0; r < obs.size(); ++r) d.row(r) = d_fused.row(obs[r]) * inv_count(obs[r]);
        out.push_back(std::move(d));
    }
    return out;
}

Matrix fuse_features_unmasked(const std::vector<Matrix>& latents, const ObservedPartition& part,
                              Eigen::Index n) {
    if (latents.empty() || latents.size() != part.views.size())
        throw std::invalid_argument("fuse_features_unmasked: view count mismatch");
    Matrix sum = Matrix::Zero(n, latents.front().cols());
    for (std::size_t v = 0; v < latents.size(); ++v) sum += scatter_rows(latents[v], part.observed(v), n);
    return sum / static_cast<double>(latents.size());
}

std::vector<Matrix> fuse_features_unmasked_backward(const Matrix& d_fused,
                                                    const ObservedPartition& part) {
    std::vector<Matrix> out;
    const double scale = 1.0 / static_cast<double>(part.views.size());
    for (std::size_t v = 0; v < part.views.size(); ++v)
        out.push_back(gather_rows(d_fused, part.observed(v)) * scale);
    return out;
}

ProjectionCache project_clusters(const Matrix& fused, const Dense& proj) {
    check_layer(fused, proj, "project_clusters");
    const Eigen::Index n = fused.rows();
    const Eigen::Index c = proj.out_dim();
    if (n < c) throw std::invalid_argument("project_clusters: need N >= C");

    ProjectionCache cache;
    cache.logits = affine(fused, proj, Activation::none);
    Eigen::HouseholderQR<Matrix> qr(cache.logits);
    cache.q = qr.householderQ() * Matrix::Identity(n, c);
    cache.r = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < c; ++j) {
        if (!(std::abs(cache.r(j, j)) >= 1e-10))
            throw DegenerateProjection("project_clusters: rank-deficient projection (|R(" +
                                       std::to_string(j) + "," + std::to_string(j) +
                                       ")| < 1e-10)");
        if (cache.r(j, j) < 0.0) {
            cache.r.row(j) *= -1.0;
            cache.q.col(j) *= -1.0;
        }
    }
    return cache;
}

Matrix qr_backward(const Matrix& q, const Matrix& r, const Matrix& d_q) {
    // dA = (dQ - Q (triu(B) + tril(B^T, -1))) R^-T with B = Q^T dQ.
    const Matrix b = q.transpose() * d_q;
    Matrix sym = b.triangularView<Eigen::Upper>();
    sym += b.transpose().triangularView<Eigen::StrictlyLower>();
    const Matrix rhs = d_q - q * sym;
    return r.triangularView<Eigen::Upper>().solve(rhs.transpose()).transpose();
}

Matrix project_clusters_backward(const ProjectionCache& cache, const Matrix& fused,
                                 const Dense& proj, const Matrix& d_y, Dense& grad) {
    const Matrix d_logits = qr_backward(cache.q, cache.r, d_y);
    accumulate(grad, fused, d_logits);
    return d_logits * proj.weight.transpose();
}

}  // namespace mimvc
