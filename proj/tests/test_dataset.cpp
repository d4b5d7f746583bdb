#include <doctest.h>

#include "mimvc/dataset.hpp"
#include "mimvc/error.hpp"
#include "mimvc/rng.hpp"
#include "oracles.hpp"

#include <fstream>

using namespace mimvc;
namespace fs = std::filesystem;

namespace {

const fs::path kTmp = MIMVC_TEST_TMP;

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

fs::path two_view_dir(const std::string& name) {
    const auto dir = oracle::fresh_dir(kTmp, name);
    write_text(dir / "manifest.json", R"({"views": ["a", "b"], "N": 4, "V": 2})");
    write_text(dir / "view_a.csv", "0,1\n2,3\n4,5\n6,7\n");
    write_text(dir / "view_b.csv", "1,0,0\n0,1,0\n0,0,1\n1,1,1\n");
    write_text(dir / "labels.csv", "5\n5\n9\n9\n");
    write_text(dir / "mask.csv", "1,1\n1,1\n1,1\n1,1\n");
    return dir;
}

}  // namespace

TEST_CASE("load_dataset reads a two-view directory") {
    const auto data = load_dataset(two_view_dir("load_ok"));
    CHECK(data.num_samples() == 4);
    CHECK(data.num_views() == 2);
    CHECK(data.views[1].cols() == 3);
    CHECK(data.views[0](2, 1) == 5.0);
    REQUIRE(data.labels);
    // Labels remapped to 0..C-1.
    CHECK(*data.labels == std::vector<int>{0, 0, 1, 1});
    CHECK(*data.num_clusters == 2);
}

TEST_CASE("load_dataset rejects a truncated view") {
    const auto dir = two_view_dir("load_truncated");
    write_text(dir / "view_b.csv", "1,0,0\n0,1,0\n0,0,1\n");
    CHECK_THROWS_AS(load_dataset(dir), DataError);
    try {
        load_dataset(dir);
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("row-count mismatch") != std::string::npos);
    }
}

TEST_CASE("load_dataset defaults to a complete mask") {
    const auto dir = two_view_dir("load_nomask");
    fs::remove(dir / "mask.csv");
    const auto data = load_dataset(dir);
    CHECK(data.mask.rows() == 4);
    CHECK(is_complete(data.mask));
}

TEST_CASE("load_dataset error paths") {
    SUBCASE("missing view file") {
        const auto dir = two_view_dir("load_missing");
        fs::remove(dir / "view_a.csv");
        CHECK_THROWS_AS(load_dataset(dir), DataError);
    }
    SUBCASE("non-numeric cell") {
        const auto dir = two_view_dir("load_nan_cell");
        write_text(dir / "view_a.csv", "0,1\n2,x\n4,5\n6,7\n");
        CHECK_THROWS_AS(load_dataset(dir), DataError);
    }
    SUBCASE("all-zero mask row") {
        const auto dir = two_view_dir("load_zero_row");
        write_text(dir / "mask.csv", "1,1\n0,0\n1,1\n1,1\n");
        CHECK_THROWS_AS(load_dataset(dir), DataError);
    }
    SUBCASE("single class labels") {
        const auto dir = two_view_dir("load_one_class");
        write_text(dir / "labels.csv", "3\n3\n3\n3\n");
        CHECK_THROWS_AS(load_dataset(dir), DataError);
    }
    SUBCASE("missing manifest") {
        const auto dir = two_view_dir("load_no_manifest");
        fs::remove(dir / "manifest.json");
        CHECK_THROWS_AS(load_dataset(dir), DataError);
    }
}

TEST_CASE("save_dataset round trips") {
    auto data = load_dataset(two_view_dir("save_src"));
    data.mask(1, 0) = 0;
    const auto dir = oracle::fresh_dir(kTmp, "save_dst");
    save_dataset(data, dir);
    const auto back = load_dataset(dir);
    CHECK(back.views[0] == data.views[0]);
    CHECK(back.views[1] == data.views[1]);
    CHECK(back.mask == data.mask);
    CHECK(*back.labels == *data.labels);
}

TEST_CASE("scale_min_max") {
    Matrix x(3, 2);
    x << 0, 5, 2, 5, 4, 5;
    const auto s = scale_min_max(x);
    CHECK(s(0, 0) == 0.0);
    CHECK(s(1, 0) == 0.5);
    CHECK(s(2, 0) == 1.0);
    CHECK(s.col(1).isZero());

    Matrix bad = x;
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(scale_min_max(bad), std::invalid_argument);
}

TEST_CASE("scale_min_max matches a per-column recomputation on random input") {
    Rng rng(3);
    Matrix x(6, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-5, 5);
    const auto s = scale_min_max(x);
    for (Eigen::Index c = 0; c < 3; ++c) {
        double lo = x(0, c), hi = x(0, c);
        for (Eigen::Index r = 1; r < 6; ++r) {
            lo = std::min(lo, x(r, c));
            hi = std::max(hi, x(r, c));
        }
        for (Eigen::Index r = 0; r < 6; ++r) CHECK(s(r, c) == doctest::Approx((x(r, c) - lo) / (hi - lo)).epsilon(1e-15));
        CHECK(s.col(c).minCoeff() == 0.0);
        CHECK(s.col(c).maxCoeff() == 1.0);
    }
}

TEST_CASE("scale_views uses observed rows only") {
    MultiViewDataset d;
    d.views = {Matrix(3, 1)};
    d.views[0] << 0, 100, 10;
    d.names = {"a"};
    d.mask = Mask::Ones(3, 1);
    d.views.push_back(Matrix::Ones(3, 1));
    d.names.push_back("b");
    d.mask.conservativeResize(3, 2);
    d.mask.col(1).setOnes();
    d.mask(1, 0) = 0;  // the outlier is a placeholder
    const auto s = scale_views(d);
    CHECK(s.views[0](0, 0) == 0.0);
    CHECK(s.views[0](2, 0) == 1.0);
    CHECK(s.views[0](1, 0) == 0.0);
}

TEST_CASE("generate_mask") {
    SUBCASE("zero rate gives all ones") {
        CHECK(is_complete(generate_mask(7, 3, {0.0, 1})));
    }
    SUBCASE("exact count, no empty rows, deterministic") {
        const MaskSpec spec{0.3, 7};
        const auto a = generate_mask(10, 2, spec);
        const auto b = generate_mask(10, 2, spec);
        CHECK(a == b);
        CHECK((a.array() == 0).count() == 6);
        for (Eigen::Index i = 0; i < 10; ++i) CHECK(a.row(i).cast<int>().sum() >= 1);
    }
    SUBCASE("rate bound (V-1)/V") {
        CHECK_THROWS_AS(generate_mask(4, 2, {0.6, 0}), std::invalid_argument);
        CHECK_THROWS_AS(generate_mask(4, 2, {0.5, 0}), std::invalid_argument);
        CHECK_THROWS_AS(generate_mask(4, 2, {-0.1, 0}), std::invalid_argument);
        CHECK_THROWS_AS(generate_mask(4, 1, {0.1, 0}), std::invalid_argument);
    }
    SUBCASE("property: zero fraction is round(eta N V)/(N V) for random shapes") {
        Rng rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            const auto n = static_cast<Eigen::Index>(2 + rng.below(40));
            const auto v = static_cast<Eigen::Index>(2 + rng.below(4));
            const double eta = rng.uniform() * (static_cast<double>(v - 1) / v) * 0.999;
            const auto m = generate_mask(n, v, {eta, rng.next()});
            CHECK((m.array() == 0).count() == std::llround(eta * n * v));
            for (Eigen::Index i = 0; i < n; ++i) CHECK(m.row(i).cast<int>().sum() >= 1);
        }
    }
    SUBCASE("different seeds differ") {
        CHECK(generate_mask(50, 3, {0.3, 1}) != generate_mask(50, 3, {0.3, 2}));
    }
}

TEST_CASE("partition_observed") {
    Mask m(4, 1);
    m << 1, 0, 1, 1;
    const auto p = partition_observed(m);
    CHECK(p.views[0].observed == IndexList{0, 2, 3});
    CHECK(p.views[0].missing == IndexList{1});

    const auto full = partition_observed(Mask::Ones(5, 2));
    for (const auto& v : full.views) {
        CHECK(v.observed == IndexList{0, 1, 2, 3, 4});
        CHECK(v.missing.empty());
    }
}

TEST_CASE("gather/scatter realizes the masked identity placement") {
    Rng rng(5);
    const auto mask = generate_mask(20, 3, {0.4, 9});
    const auto part = partition_observed(mask);
    Matrix x(20, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Eigen::Index v = 0; v < 3; ++v) {
        const auto& pv = part.views[v];
        CHECK(static_cast<Eigen::Index>(pv.observed.size()) == mask.col(v).cast<int>().sum());
        CHECK(std::is_sorted(pv.observed.begin(), pv.observed.end()));
        CHECK(pv.observed.size() + pv.missing.size() == 20);

        const Matrix z = gather_rows(x, pv.observed);
        const Matrix back = scatter_rows(z, pv.observed, 20);
        // Brute force: x with missing rows zeroed.
        for (Eigen::Index i = 0; i < 20; ++i)
            for (Eigen::Index c = 0; c < 4; ++c)
                CHECK(back(i, c) == (mask(i, v) ? x(i, c) : 0.0));
        CHECK(gather_rows(back, pv.observed) == z);
    }
}
