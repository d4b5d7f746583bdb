#pragma once

#include "mimvc/dataset.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace mimvc {

struct KMeansResult {
    std::vector<int> labels;
    Matrix centroids;
    double inertia = 0.0;
    int iterations = 0;
};

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 300;
    double tolerance = 1e-6;  // max centroid shift
};

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` by inertia.
/// An emptied cluster is re-seeded at the point farthest from its centroid.
KMeansResult kmeans(const Matrix& points, int clusters, std::uint64_t seed,
                    const KMeansOptions& opts = {});

/// Single Lloyd run from the given initial centroids.
KMeansResult lloyd(const Matrix& points, Matrix centroids, const KMeansOptions& opts = {});

/// Clustering accuracy under the best one-to-one label mapping.
double accuracy_hungarian(const std::vector<int>& pred, const std::vector<int>& truth);

/// Mutual information over the geometric mean of the entropies (natural
/// log). Returns 0 when either partition has zero entropy.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);

/// Adjusted Rand index.
double ari(const std::vector<int>& pred, const std::vector<int>& truth);

/// Pair-counting F-measure; "positive" means two samples share a cluster.
double pairwise_fscore(const std::vector<int>& pred, const std::vector<int>& truth);

/// Minimum-cost perfect matching on a square cost matrix; returns the column
/// assigned to each row.
std::vector<int> hungarian_assignment(const Matrix& cost);

struct MetricsRecord {
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    double fscore = 0.0;
    std::uint64_t seed = 0;
    int epoch = 0;
    std::string variant = "full";
    double eta = 0.0;
    double lambda = 0.0;
};

MetricsRecord score_partition(const std::vector<int>& pred, const std::vector<int>& truth);

/// K-means on `embedding` once per seed; metrics averaged over seeds.
MetricsRecord evaluate(const Matrix& embedding, const std::vector<int>& labels, int clusters,
                       const std::vector<std::uint64_t>& seeds, const KMeansOptions& opts = {});

extern const char* const kMetricsHeader;  // variant,eta,lambda,seed,epoch,acc,nmi,ari,fscore
void write_metrics_row(std::ostream& out, const MetricsRecord& m);

}  // namespace mimvc
