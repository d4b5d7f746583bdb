#include "mimvc/training.hpp"

#include "mimvc/error.hpp"
#include "mimvc/model_io.hpp"
#include "mimvc/rng.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace mimvc {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kEvalStream = 100;

}  // namespace

std::string to_string(Variant v) {
    switch (v) {
    case Variant::full: return "full";
    case Variant::wo_mff: return "wo_mff";
    case Variant::wo_mgf: return "wo_mgf";
    case Variant::wo_wcl: return "wo_wcl";
    case Variant::wo_rec: return "wo_rec";
    case Variant::w_cl: return "w_cl";
    case Variant::w_dcl: return "w_dcl";
    }
    return "full";
}

Variant variant_from_string(const std::string& s) {
    for (auto v : kAllVariants)
        if (to_string(v) == s) return v;
    throw ConfigError("unknown variant '" + s + "'");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (graph_refresh_period < 1) throw ConfigError("graph_refresh_period must be >= 1");
    if (eval_runs < 1) throw ConfigError("eval_runs must be >= 1");
    if (kmeans_restarts < 1) throw ConfigError("kmeans_restarts must be >= 1");
    if (eval_every < 0 || checkpoint_every < 0)
        throw ConfigError("schedules must be non-negative");
    if (hidden1 < 1 || hidden2 < 1 || latent < 1) throw ConfigError("layer widths must be >= 1");
    loss_config().validate();
}

LossConfig TrainConfig::loss_config() const {
    LossConfig lc;
    lc.lambda = lambda;
    lc.tau = tau;
    lc.eps = eps;
    lc.literal_eq14 = literal_eq14;
    lc.variant = settings_for(*this).contrastive;
    return lc;
}

std::vector<std::uint64_t> TrainConfig::eval_seeds() const {
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < eval_runs; ++r)
        seeds.push_back(derive_seed(seed, kEvalStream + static_cast<std::uint64_t>(r)));
    return seeds;
}

VariantSettings settings_for(const TrainConfig& cfg) {
    VariantSettings vs;
    vs.contrastive_weight = cfg.lambda;
    switch (cfg.variant) {
    case Variant::full: break;
    case Variant::wo_mff: vs.masked_features = false; break;
    case Variant::wo_mgf: vs.masked_graphs = false; break;
    case Variant::wo_wcl: vs.contrastive_weight = 0.0; break;
    case Variant::wo_rec: vs.rec_weight = 0.0; break;
    case Variant::w_cl: vs.contrastive = ContrastiveKind::cl; break;
    case Variant::w_dcl: vs.contrastive = ContrastiveKind::dcl; break;
    }
    return vs;
}

StaticGraphs prepare_static_graphs(const MultiViewDataset& data, const ObservedPartition& part,
                                   int k) {
    StaticGraphs sg;
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        const auto& obs = part.observed(v);
        if (static_cast<long>(obs.size()) < k + 2)
            throw DataError("view '" + data.names[v] + "' has " + std::to_string(obs.size()) +
                            " observed samples; k=" + std::to_string(k) + " needs at least " +
                            std::to_string(k + 2));
        auto g = adaptive_knn_graph(gather_rows(data.views[v], obs), k);
        sg.normalized.push_back(gcn_normalize_sparse(g.weights));
        sg.lifted.push_back(lift_graph(g.weights, obs, data.num_samples()));
        sg.graphs.push_back(std::move(g));
    }
    return sg;
}

PreparedData prepare(const MultiViewDataset& data, const TrainConfig& cfg) {
    data.validate();
    PreparedData p;
    p.data = cfg.scale_features ? scale_views(data) : data;
    p.partition = partition_observed(p.data.mask);
    for (std::size_t v = 0; v < p.data.views.size(); ++v)
        p.observed.push_back(gather_rows(p.data.views[v], p.partition.observed(v)));
    p.graphs = prepare_static_graphs(p.data, p.partition, cfg.k);
    if (!data.num_clusters) throw DataError("cluster count unknown: provide labels or C in the manifest");
    p.clusters = *data.num_clusters;
    if (p.num_samples() <= cfg.k)
        throw DataError("k=" + std::to_string(cfg.k) + " needs more than k samples");
    return p;
}

Matrix refresh_common_graph(const Matrix& fused, int k, const std::vector<Matrix>& lifted,
                            const Mask& mask, bool masked) {
    const auto common = adaptive_knn_graph(fused, k);
    return masked ? fuse_graphs(lifted, mask, common.weights)
                  : fuse_graphs_unmasked(lifted, common.weights);
}

ForwardState forward(const Model& model, const PreparedData& prep, const VariantSettings& vs) {
    ForwardState fs;
    const auto views = prep.observed.size();
    std::vector<Matrix> latents;
    latents.reserve(views);
    for (std::size_t v = 0; v < views; ++v) {
        fs.encoders.push_back(
            encode_view(prep.observed[v], prep.graphs.normalized[v], model.encoders[v]));
        latents.push_back(fs.encoders.back().output());
    }
    fs.fused = vs.masked_features
                   ? fuse_features(latents, prep.partition, prep.data.mask)
                   : fuse_features_unmasked(latents, prep.partition, prep.num_samples());
    for (std::size_t v = 0; v < views; ++v)
        fs.decoders.push_back(
            decode_view(gather_rows(fs.fused, prep.partition.observed(v)), model.decoders[v]));
    return fs;
}

LossBreakdown objective_from_forward(const Model& model, const PreparedData& prep,
                                     ForwardState& fs, const Matrix& fused_graph,
                                     const VariantSettings& vs, const LossConfig& loss,
                                     Model* grad) {
    const auto views = prep.observed.size();
    LossBreakdown out;

    std::vector<Matrix> recon;
    for (const auto& d : fs.decoders) recon.push_back(d.output());
    std::vector<Matrix> d_recon;
    out.reconstruction =
        reconstruction_loss(prep.observed, recon, prep.num_samples(), grad ? &d_recon : nullptr);

    Matrix d_y;
    const bool use_contrastive = vs.contrastive != ContrastiveKind::none;
    if (use_contrastive) {
        fs.projection = project_clusters(fs.fused, model.projection);
        LossConfig lc = loss;
        lc.variant = vs.contrastive;
        out.contrastive = contrastive_loss(lc, fs.projection->q, fused_graph,
                                           grad && vs.contrastive_weight != 0.0 ? &d_y : nullptr);
    }
    out.total = vs.rec_weight * out.reconstruction;
    out.total = total_loss(out.total, out.contrastive, vs.contrastive_weight);
    if (!grad) return out;

    *grad = zeros_like(model);
    Matrix d_fused = Matrix::Zero(fs.fused.rows(), fs.fused.cols());
    if (vs.rec_weight != 0.0) {
        for (std::size_t v = 0; v < views; ++v) {
            const Matrix d_in = decode_view_backward(fs.decoders[v], model.decoders[v],
                                                     vs.rec_weight * d_recon[v], grad->decoders[v]);
            const auto& obs = prep.partition.observed(v);
            for (std::size_t r = 0; r < obs.size(); ++r) d_fused.row(obs[r]) += d_in.row(r);
        }
    }
    if (use_contrastive && vs.contrastive_weight != 0.0) {
        d_fused += project_clusters_backward(*fs.projection, fs.fused, model.projection,
                                             vs.contrastive_weight * d_y, grad->projection);
    }
    const auto d_latents = vs.masked_features
                               ? fuse_features_backward(d_fused, prep.partition, prep.data.mask)
                               : fuse_features_unmasked_backward(d_fused, prep.partition);
    for (std::size_t v = 0; v < views; ++v)
        encode_view_backward(fs.encoders[v], prep.graphs.normalized[v], model.encoders[v],
                             d_latents[v], grad->encoders[v]);

    if (!model.use_bias) {
        auto tensors = parameter_tensors(*grad);
        for (std::size_t t = 1; t < tensors.size(); t += 2) tensors[t]->setZero();
    }
    return out;
}

LossBreakdown compute_objective(const Model& model, const PreparedData& prep,
                                const Matrix& fused_graph, const VariantSettings& vs,
                                const LossConfig& loss, Model* grad) {
    auto fs = forward(model, prep, vs);
    return objective_from_forward(model, prep, fs, fused_graph, vs, loss, grad);
}

Matrix embed(const Model& model, const PreparedData& prep, bool masked_features) {
    std::vector<Matrix> latents;
    for (std::size_t v = 0; v < prep.observed.size(); ++v)
        latents.push_back(
            encode_view(prep.observed[v], prep.graphs.normalized[v], model.encoders[v]).output());
    return masked_features ? fuse_features(latents, prep.partition, prep.data.mask)
                           : fuse_features_unmasked(latents, prep.partition, prep.num_samples());
}

AdamState AdamState::for_model(const Model& m) {
    AdamState s;
    s.first = zeros_like(m);
    s.second = zeros_like(m);
    return s;
}

void AdamState::update(Model& params, const Model& grad, double learning_rate) {
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    auto p = parameter_tensors(params);
    const auto g = parameter_tensors(grad);
    auto m = parameter_tensors(first);
    auto v = parameter_tensors(second);
    for (std::size_t t = 0; t < p.size(); ++t) {
        m[t]->array() = beta1 * m[t]->array() + (1.0 - beta1) * g[t]->array();
        v[t]->array() = beta2 * v[t]->array() + (1.0 - beta2) * g[t]->array().square();
        p[t]->array() -= learning_rate * (m[t]->array() / c1) /
                         ((v[t]->array() / c2).sqrt() + epsilon);
    }
}

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

MetricsRecord evaluate_representation(const Model& model, const Matrix& fused,
                                      const PreparedData& prep, const TrainConfig& cfg) {
    if (!prep.data.labels) throw DataError("evaluation requires ground-truth labels");
    KMeansOptions opts;
    opts.restarts = cfg.kmeans_restarts;
    const Matrix points = cfg.cluster_on == ClusterOn::projection
                              ? project_clusters(fused, model.projection).q
                              : fused;
    auto m = evaluate(points, *prep.data.labels, prep.clusters, cfg.eval_seeds(), opts);
    m.seed = cfg.seed;
    m.variant = to_string(cfg.variant);
    m.lambda = cfg.lambda;
    const auto& mask = prep.data.mask;
    m.eta = static_cast<double>((mask.array() == 0).count()) / static_cast<double>(mask.size());
    return m;
}

}  // namespace

void TrainHistory::write_csv(std::ostream& out) const {
    out << "epoch,total,rec,contrastive";
    if (has_metrics) out << ",acc,nmi,ari,fscore";
    out << '\n';
    for (const auto& e : epochs) {
        out << e.epoch << ',' << fmt(e.loss.total) << ',' << fmt(e.loss.reconstruction) << ','
            << fmt(e.loss.contrastive);
        if (has_metrics) {
            if (e.metrics)
                out << ',' << fmt(e.metrics->acc) << ',' << fmt(e.metrics->nmi) << ','
                    << fmt(e.metrics->ari) << ',' << fmt(e.metrics->fscore);
            else
                out << ",,,,";
        }
        out << '\n';
    }
}

void TrainHistory::write_plot_csv(std::ostream& out) const {
    out << "epoch,acc,nmi,ari,fscore,loss\n";
    for (const auto& e : epochs) {
        if (!e.metrics) continue;
        out << e.epoch << ',' << fmt(e.metrics->acc) << ',' << fmt(e.metrics->nmi) << ','
            << fmt(e.metrics->ari) << ',' << fmt(e.metrics->fscore) << ',' << fmt(e.loss.total)
            << '\n';
    }
}

TrainResult train(const MultiViewDataset& data, const TrainConfig& cfg) {
    cfg.validate();
    return train(prepare(data, cfg), cfg);
}

TrainResult train(const PreparedData& prep, const TrainConfig& cfg) {
    cfg.validate();
    const auto vs = settings_for(cfg);
    const auto loss = cfg.loss_config();

    ModelShape shape;
    for (const auto& z : prep.observed) shape.view_dims.push_back(z.cols());
    shape.hidden1 = cfg.hidden1;
    shape.hidden2 = cfg.hidden2;
    shape.latent = cfg.latent;
    shape.clusters = prep.clusters;
    shape.use_bias = cfg.use_bias;

    TrainResult res;
    res.state.seed = cfg.seed;
    res.state.model = init_model(shape, derive_seed(cfg.seed, kInitStream));
    res.state.optimizer = AdamState::for_model(res.state.model);
    const bool track_metrics = cfg.eval_every > 0 && prep.data.labels.has_value();
    res.history.has_metrics = track_metrics;
    res.history.epochs.reserve(static_cast<std::size_t>(cfg.epochs));

    Model& model = res.state.model;
    Model grad;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto fs = forward(model, prep, vs);
        if ((epoch - 1) % cfg.graph_refresh_period == 0)
            res.fused_graph = refresh_common_graph(fs.fused, cfg.k, prep.graphs.lifted,
                                                   prep.data.mask, vs.masked_graphs);

        EpochRecord rec;
        rec.epoch = epoch;
        try {
            rec.loss = objective_from_forward(model, prep, fs, res.fused_graph, vs, loss, &grad);
        } catch (const TrainingError& e) {
            throw TrainingError("epoch " + std::to_string(epoch) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw TrainingError("epoch " + std::to_string(epoch) + ": " + e.what());
        }
        if (!std::isfinite(rec.loss.total))
            throw TrainingError("epoch " + std::to_string(epoch) + ": non-finite loss");
        if (track_metrics && epoch % cfg.eval_every == 0)
            rec.metrics = evaluate_representation(model, fs.fused, prep, cfg);
        res.history.epochs.push_back(rec);

        res.state.optimizer.update(model, grad, cfg.learning_rate);
        res.state.epoch = epoch;
        if (!all_finite(model))
            throw TrainingError("epoch " + std::to_string(epoch) +
                                ": parameters became non-finite after the update");
        if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 &&
            !cfg.checkpoint_path.empty())
            save_model_state(res.state, cfg.checkpoint_path);
    }
    res.embedding = embed(model, prep, vs.masked_features);
    return res;
}

MetricsRecord evaluate_model(const Model& model, const PreparedData& prep, const TrainConfig& cfg) {
    const auto vs = settings_for(cfg);
    return evaluate_representation(model, embed(model, prep, vs.masked_features), prep, cfg);
}

namespace {

RunTable run_cells(const MultiViewDataset& data, std::vector<TrainConfig> configs,
                   std::size_t group_size, int workers) {
    RunTable table;
    table.cells.resize(configs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= configs.size()) return;
            try {
                const PreparedData prep = prepare(data, configs[i]);
                auto r = train(prep, configs[i]);
                auto& cell = table.cells[i];
                cell.config = configs[i];
                cell.metrics = evaluate_model(r.state.model, prep, configs[i]);
                cell.metrics.epoch = r.state.epoch;
                cell.history = std::move(r.history);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = configs.size();
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(configs.size())));
    if (n == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t g = 0; g < table.cells.size(); g += group_size) {
        MetricsRecord mean = table.cells[g].metrics;
        mean.acc = mean.nmi = mean.ari = mean.fscore = 0.0;
        for (std::size_t i = g; i < g + group_size; ++i) {
            mean.acc += table.cells[i].metrics.acc;
            mean.nmi += table.cells[i].metrics.nmi;
            mean.ari += table.cells[i].metrics.ari;
            mean.fscore += table.cells[i].metrics.fscore;
        }
        const double k = static_cast<double>(group_size);
        mean.acc /= k;
        mean.nmi /= k;
        mean.ari /= k;
        mean.fscore /= k;
        table.summary.push_back(mean);
    }
    return table;
}

}  // namespace

RunTable run_ablation(const MultiViewDataset& data, const TrainConfig& base,
                      const std::vector<std::uint64_t>& seeds, int workers) {
    if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
    std::vector<TrainConfig> configs;
    for (auto v : kAllVariants)
        for (auto s : seeds) {
            TrainConfig c = base;
            c.variant = v;
            c.seed = s;
            c.checkpoint_every = 0;
            configs.push_back(c);
        }
    return run_cells(data, std::move(configs), seeds.size(), workers);
}

RunTable run_sweep(const MultiViewDataset& data, const TrainConfig& base,
                   const std::vector<double>& lambdas, const std::vector<std::uint64_t>& seeds,
                   int workers) {
    if (seeds.empty() || lambdas.empty()) throw ConfigError("sweep needs lambdas and seeds");
    std::vector<TrainConfig> configs;
    for (double l : lambdas)
        for (auto s : seeds) {
            TrainConfig c = base;
            c.lambda = l;
            c.seed = s;
            c.checkpoint_every = 0;
            configs.push_back(c);
        }
    return run_cells(data, std::move(configs), seeds.size(), workers);
}

std::vector<double> default_lambda_grid() { return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}; }

}  // namespace mimvc
