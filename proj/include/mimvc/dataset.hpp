#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mimvc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using IndexList = std::vector<Eigen::Index>;

/// Incomplete multi-view data. Every view holds N rows in a shared sample
/// order; rows of view v where mask(i, v) == 0 are placeholders and never
/// read by the model.
struct MultiViewDataset {
    std::vector<Matrix> views;
    std::vector<std::string> names;
    std::optional<std::vector<int>> labels;  // contiguous 0..C-1 when present
    Mask mask;                               // N x V, 0/1
    std::optional<int> num_clusters;         // from labels or the manifest

    Eigen::Index num_samples() const { return mask.rows(); }
    Eigen::Index num_views() const { return static_cast<Eigen::Index>(views.size()); }

    // Throws DataError when any invariant is broken.
    void validate() const;
};

/// Global row indices observed / missing in one view, both ascending.
struct ViewPartition {
    IndexList observed;
    IndexList missing;
};

/// Index-map form of the permutation selectors: gathering with `observed`
/// extracts the observed block of a view, scattering puts it back.
struct ObservedPartition {
    std::vector<ViewPartition> views;

    const IndexList& observed(std::size_t v) const { return views[v].observed; }
};

enum class MaskScheme { uniform_row_constrained };

struct MaskSpec {
    double missing_rate = 0.0;
    std::uint64_t seed = 0;
    MaskScheme scheme = MaskScheme::uniform_row_constrained;
};

// Loads a dataset directory: manifest.json, view_<name>.csv, optional
// labels.csv and mask.csv. Labels are remapped to 0..C-1.
MultiViewDataset load_dataset(const std::filesystem::path& dir);

// Writes the directory layout read by load_dataset (values at %.17g).
void save_dataset(const MultiViewDataset& data, const std::filesystem::path& dir);

Matrix read_matrix_csv(const std::filesystem::path& file);
void write_matrix_csv(const Matrix& m, const std::filesystem::path& file);
Mask read_mask_csv(const std::filesystem::path& file);
void write_mask_csv(const Mask& mask, const std::filesystem::path& file);

/// Column-wise min-max scaling into [0, 1]; constant columns map to 0.
Matrix scale_min_max(const Matrix& x);

/// Scales each view using statistics of its observed rows only; missing
/// rows are zero-filled.
MultiViewDataset scale_views(const MultiViewDataset& data);

/// Masks exactly round(rate * N * V) cells, drawn uniformly without
/// replacement, never emptying a row. Pure function of its arguments.
Mask generate_mask(Eigen::Index n, Eigen::Index v, const MaskSpec& spec);

ObservedPartition partition_observed(const Mask& mask);

Matrix gather_rows(const Matrix& x, const IndexList& rows);

// Places src rows at `rows` of an n-row zero matrix.
Matrix scatter_rows(const Matrix& src, const IndexList& rows, Eigen::Index n);

bool is_complete(const Mask& mask);

}  // namespace mimvc
