#pragma once

#include "mimvc/dataset.hpp"

#include <cstdint>
#include <vector>

namespace mimvc {

/// Multi-view Gaussian blobs. In every view the class centers sit on scaled
/// coordinate axes (a random axis per class) with pairwise distance
/// `separation`; samples add isotropic noise of std `sigma`. Labels are
/// balanced (i mod C). The mask is all ones.
struct BlobSpec {
    Eigen::Index samples = 300;
    int clusters = 3;
    std::vector<Eigen::Index> dims{8, 12, 16};
    double sigma = 0.15;
    double separation = 1.0;
    std::uint64_t seed = 0;
};

MultiViewDataset make_gaussian_blobs(const BlobSpec& spec);

}  // namespace mimvc
