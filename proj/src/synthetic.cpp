#include "mimvc/synthetic.hpp"

#include "mimvc/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mimvc {

MultiViewDataset make_gaussian_blobs(const BlobSpec& spec) {
    if (spec.clusters < 2 || spec.samples < spec.clusters)
        throw std::invalid_argument("make_gaussian_blobs: need 2 <= C <= N");
    Rng rng(spec.seed);
    MultiViewDataset data;
    const double radius = spec.separation / std::sqrt(2.0);
    std::vector<int> labels(static_cast<std::size_t>(spec.samples));
    for (Eigen::Index i = 0; i < spec.samples; ++i) labels[i] = static_cast<int>(i % spec.clusters);

    for (std::size_t v = 0; v < spec.dims.size(); ++v) {
        const auto d = spec.dims[v];
        if (d < spec.clusters)
            throw std::invalid_argument("make_gaussian_blobs: view dimension below cluster count");
        std::vector<Eigen::Index> axes(static_cast<std::size_t>(d));
        std::iota(axes.begin(), axes.end(), Eigen::Index{0});
        rng.shuffle(axes.begin(), axes.end());
        Matrix x(spec.samples, d);
        for (Eigen::Index i = 0; i < spec.samples; ++i) {
            for (Eigen::Index c = 0; c < d; ++c) x(i, c) = spec.sigma * rng.normal();
            x(i, axes[labels[i]]) += radius;
        }
        data.views.push_back(std::move(x));
        data.names.push_back("v" + std::to_string(v));
    }
    data.labels = std::move(labels);
    data.num_clusters = spec.clusters;
    data.mask = Mask::Ones(spec.samples, static_cast<Eigen::Index>(spec.dims.size()));
    return data;
}

}  // namespace mimvc
