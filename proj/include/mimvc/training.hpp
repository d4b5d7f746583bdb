#pragma once

#include "mimvc/dataset.hpp"
#include "mimvc/evaluation.hpp"
#include "mimvc/graph.hpp"
#include "mimvc/losses.hpp"
#include "mimvc/network.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mimvc {

enum class Variant { full, wo_mff, wo_mgf, wo_wcl, wo_rec, w_cl, w_dcl };

inline constexpr std::array<Variant, 7> kAllVariants{Variant::full,   Variant::wo_mff,
                                                     Variant::wo_mgf, Variant::wo_wcl,
                                                     Variant::wo_rec, Variant::w_cl,
                                                     Variant::w_dcl};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

enum class ClusterOn { fused, projection };

struct TrainConfig {
    int epochs = 1500;
    double learning_rate = 1e-3;
    double lambda = 1.0;
    double tau = 1.0;
    double eps = 1e-12;
    int k = 15;
    std::uint64_t seed = 0;
    int graph_refresh_period = 1;
    Variant variant = Variant::full;
    bool use_bias = true;
    bool literal_eq14 = false;
    bool scale_features = true;

    Eigen::Index hidden1 = 196;
    Eigen::Index hidden2 = 128;
    Eigen::Index latent = 64;

    // Evaluation: K-means runs per evaluation (seeds derived from `seed`),
    // restarts per run, optional per-epoch schedule (0 = final only).
    int eval_runs = 5;
    int kmeans_restarts = 10;
    int eval_every = 0;
    ClusterOn cluster_on = ClusterOn::fused;

    // 0 disables checkpoints.
    int checkpoint_every = 0;
    std::filesystem::path checkpoint_path;

    void validate() const;
    LossConfig loss_config() const;
    std::vector<std::uint64_t> eval_seeds() const;
};

/// What a variant changes relative to the full model.
struct VariantSettings {
    bool masked_features = true;
    bool masked_graphs = true;
    ContrastiveKind contrastive = ContrastiveKind::wcl;
    double rec_weight = 1.0;
    double contrastive_weight = 1.0;
};

VariantSettings settings_for(const TrainConfig& cfg);

/// Static per-view graphs, built once from the observed rows.
struct StaticGraphs {
    std::vector<NeighborGraph> graphs;
    std::vector<SparseMatrix> normalized;
    std::vector<Matrix> lifted;
};

StaticGraphs prepare_static_graphs(const MultiViewDataset& data, const ObservedPartition& part,
                                   int k);

/// Everything the model consumes, derived once from a dataset.
struct PreparedData {
    MultiViewDataset data;          // scaled when requested
    ObservedPartition partition;
    std::vector<Matrix> observed;   // observed rows of each view
    StaticGraphs graphs;
    int clusters = 0;

    Eigen::Index num_samples() const { return data.num_samples(); }
};

PreparedData prepare(const MultiViewDataset& data, const TrainConfig& cfg);

/// Builds S from the fused features with the adaptive-neighbor constructor and
/// fuses it with the lifted view graphs. The result is treated as data: no
/// gradient flows through it.
Matrix refresh_common_graph(const Matrix& fused, int k, const std::vector<Matrix>& lifted,
                            const Mask& mask, bool masked = true);

struct ForwardState {
    std::vector<StackCache> encoders;
    Matrix fused;
    std::vector<StackCache> decoders;
    std::optional<ProjectionCache> projection;
};

ForwardState forward(const Model& model, const PreparedData& prep, const VariantSettings& vs);

struct LossBreakdown {
    double total = 0.0;
    double reconstruction = 0.0;
    double contrastive = 0.0;
};

/// Losses for a computed forward pass; fills `grad` (same shapes as model)
/// when given. `fused_graph` is held constant.
LossBreakdown objective_from_forward(const Model& model, const PreparedData& prep,
                                     ForwardState& fs, const Matrix& fused_graph,
                                     const VariantSettings& vs, const LossConfig& loss,
                                     Model* grad);

LossBreakdown compute_objective(const Model& model, const PreparedData& prep,
                                const Matrix& fused_graph, const VariantSettings& vs,
                                const LossConfig& loss, Model* grad = nullptr);

/// Fused features for the current parameters.
Matrix embed(const Model& model, const PreparedData& prep, bool masked_features = true);

/// Adaptive moment estimation (decays 0.9 / 0.999, bias corrected).
struct AdamState {
    Model first;
    Model second;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_model(const Model& m);
    void update(Model& params, const Model& grad, double learning_rate);
};

/// Parameters plus optimizer moments; the unit of checkpointing.
struct ModelState {
    Model model;
    AdamState optimizer;
    int epoch = 0;
    std::uint64_t seed = 0;
};

struct EpochRecord {
    int epoch = 0;
    LossBreakdown loss;
    std::optional<MetricsRecord> metrics;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    bool has_metrics = false;

    void write_csv(std::ostream& out) const;
    /// epoch,acc,nmi,ari,fscore,loss for epochs that were evaluated.
    void write_plot_csv(std::ostream& out) const;
};

struct TrainResult {
    ModelState state;
    TrainHistory history;
    Matrix embedding;    // fused features after the final update
    Matrix fused_graph;  // last graph used by the contrastive loss
};

TrainResult train(const MultiViewDataset& data, const TrainConfig& cfg);
TrainResult train(const PreparedData& prep, const TrainConfig& cfg);

/// Clustering metrics for a trained model (final-epoch representation).
MetricsRecord evaluate_model(const Model& model, const PreparedData& prep, const TrainConfig& cfg);

struct CellResult {
    TrainConfig config;
    MetricsRecord metrics;
    TrainHistory history;
};

struct RunTable {
    std::vector<CellResult> cells;
    std::vector<MetricsRecord> summary;  // mean over seeds, one per group
};

/// All seven variants, each trained with every seed in `seeds`.
RunTable run_ablation(const MultiViewDataset& data, const TrainConfig& base,
                      const std::vector<std::uint64_t>& seeds, int workers = 1);

/// Cross product of lambda values and seeds; summary row per lambda.
RunTable run_sweep(const MultiViewDataset& data, const TrainConfig& base,
                   const std::vector<double>& lambdas, const std::vector<std::uint64_t>& seeds,
                   int workers = 1);

/// 10^-3 .. 10^3.
std::vector<double> default_lambda_grid();

}  // namespace mimvc
