#include <doctest.h>

#include "mimvc/graph.hpp"
#include "mimvc/rng.hpp"
#include "oracles.hpp"

#include <fstream>

using namespace mimvc;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
    return m;
}

Matrix random_graph(Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.uniform();
    a.diagonal().setZero();
    return a;
}

}  // namespace

TEST_CASE("adaptive neighbors: 1-D points with k=1") {
    Matrix pts(3, 1);
    pts << 0, 1, 3;
    const Matrix w = adaptive_neighbor_weights(pts, 1);
    Matrix expected = Matrix::Zero(3, 3);
    expected(0, 1) = 1;
    expected(1, 0) = 1;
    expected(2, 1) = 1;
    CHECK(w.isApprox(expected));

    const auto g = adaptive_knn_graph(pts, 1);
    CHECK(g.weights(0, 1) == 1.0);
    CHECK(g.weights(1, 2) == 0.5);
    CHECK(g.weights(2, 1) == 0.5);
    CHECK(g.weights(0, 2) == 0.0);
}

TEST_CASE("adaptive neighbors: closed form on a hand case") {
    // Point 0 sees squared distances 1, 4, 9 to points 1, 2, 3. With k=2:
    // den = 2*9 - (1+4) = 13, weights (9-1)/13 and (9-4)/13.
    Matrix pts(4, 1);
    pts << 0, 1, 2, 3;
    const Matrix w = adaptive_neighbor_weights(pts, 2);
    CHECK(w(0, 1) == doctest::Approx(8.0 / 13.0).epsilon(1e-14));
    CHECK(w(0, 2) == doctest::Approx(5.0 / 13.0).epsilon(1e-14));
    CHECK(w(0, 3) == 0.0);
}

TEST_CASE("adaptive neighbors: identical rows split mass evenly") {
    const Matrix pts = Matrix::Constant(6, 3, 0.25);
    const int k = 4;
    const Matrix w = adaptive_neighbor_weights(pts, k);
    for (Eigen::Index i = 0; i < 6; ++i) {
        int nz = 0;
        for (Eigen::Index j = 0; j < 6; ++j) {
            if (w(i, j) != 0.0) {
                ++nz;
                CHECK(w(i, j) == doctest::Approx(1.0 / k));
            }
        }
        CHECK(nz == k);
        CHECK(w(i, i) == 0.0);
    }
}

TEST_CASE("adaptive neighbors: rows are stochastic on random data") {
    const Matrix pts = random_matrix(30, 5, 11);
    const Matrix w = adaptive_neighbor_weights(pts, 5);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        CHECK(std::abs(w.row(i).sum() - 1.0) <= 1e-9);
        CHECK(w.row(i).minCoeff() >= 0.0);
        CHECK(w.row(i).maxCoeff() <= 1.0);
        CHECK((w.row(i).array() > 0).count() <= 5);
    }
    const auto g = adaptive_knn_graph(pts, 5);
    CHECK((g.weights - g.weights.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.weights.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK((g.weights.array() > 0).count() <= 2 * 5 * g.weights.rows());
}

TEST_CASE("adaptive neighbors: input validation") {
    const Matrix pts = random_matrix(4, 2, 1);
    CHECK_THROWS_AS(adaptive_knn_graph(pts, 4), std::invalid_argument);
    CHECK_THROWS_AS(adaptive_knn_graph(pts, 0), std::invalid_argument);
    Matrix bad = pts;
    bad(1, 1) = std::nan("");
    CHECK_THROWS_AS(adaptive_knn_graph(bad, 1), std::invalid_argument);
}

TEST_CASE("gcn_normalize examples") {
    CHECK(gcn_normalize(Matrix::Zero(4, 4)).isIdentity());

    Matrix two(2, 2);
    two << 0, 1, 1, 0;
    CHECK(gcn_normalize(two).isApprox(Matrix::Constant(2, 2, 0.5)));

    const Matrix a = random_graph(12, 5);
    const Matrix n = gcn_normalize(a);
    CHECK((n - n.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

    // Independent recomputation from the definition.
    const Matrix ai = a + Matrix::Identity(12, 12);
    const Vector d = ai.rowwise().sum().cwiseSqrt().cwiseInverse();
    CHECK(n.isApprox(d.asDiagonal() * ai * d.asDiagonal(), 1e-14));
    CHECK(Matrix(gcn_normalize_sparse(a)).isApprox(n, 1e-14));
}

TEST_CASE("lift_graph and restrict_graph") {
    const Matrix a = random_graph(5, 3);
    IndexList all{0, 1, 2, 3, 4};
    CHECK(lift_graph(a, all, 5) == a);

    Matrix pair(2, 2);
    pair << 0, 0.7, 0.7, 0;
    const Matrix lifted = lift_graph(pair, {0, 2}, 3);
    Matrix expected = Matrix::Zero(3, 3);
    expected(0, 2) = expected(2, 0) = 0.7;
    CHECK(lifted == expected);

    const IndexList obs{1, 4, 5, 8};
    const Matrix g = random_graph(4, 9);
    const Matrix big = lift_graph(g, obs, 10);
    CHECK(restrict_graph(big, obs) == g);
    for (Eigen::Index i : IndexList{0, 2, 3, 6, 7, 9}) {
        CHECK(big.row(i).isZero(0));
        CHECK(big.col(i).isZero(0));
    }
    CHECK_THROWS_AS(lift_graph(g, {0, 1}, 10), std::invalid_argument);
}

TEST_CASE("fuse_graphs examples") {
    SUBCASE("single view equal to S") {
        Matrix s = random_graph(5, 2);
        Mask m = Mask::Ones(5, 1);
        CHECK(fuse_graphs({s}, m, s).isApprox(s));
    }
    SUBCASE("pair unobserved everywhere keeps s_ij") {
        Mask m(3, 2);
        m << 1, 0, 0, 1, 1, 1;
        std::vector<Matrix> lifted{Matrix::Constant(3, 3, 0.9), Matrix::Constant(3, 3, 0.8)};
        Matrix s = Matrix::Constant(3, 3, 0.3);
        // Samples 0 and 1 share no view.
        CHECK(fuse_graphs(lifted, m, s)(0, 1) == 0.3);
    }
    SUBCASE("hand value 0.4") {
        Mask m(2, 2);
        m << 1, 0, 1, 1;
        Matrix a1 = Matrix::Zero(2, 2), a2 = Matrix::Zero(2, 2), s = Matrix::Zero(2, 2);
        a1(0, 1) = a1(1, 0) = 0.6;
        a2(0, 1) = a2(1, 0) = 0.95;
        s(0, 1) = s(1, 0) = 0.2;
        const Matrix f = fuse_graphs({a1, a2}, m, s);
        CHECK(f(0, 1) == doctest::Approx(0.4).epsilon(1e-15));
        CHECK(f(1, 0) == doctest::Approx(0.4).epsilon(1e-15));
        CHECK(f(0, 0) == 0.0);
    }
    SUBCASE("all-ones mask is the arithmetic mean") {
        const Matrix a = random_graph(7, 1), b = random_graph(7, 2), s = random_graph(7, 3);
        const Matrix f = fuse_graphs({a, b}, Mask::Ones(7, 2), s);
        CHECK(f == (a + b + s) / 3.0);
        CHECK(fuse_graphs_unmasked({a, b}, s) == (a + b + s) / 3.0);
    }
}

TEST_CASE("fuse_graphs matches explicit pairwise masks bit for bit") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = 5 + static_cast<Eigen::Index>(rng.below(46));
        const Eigen::Index v = 1 + static_cast<Eigen::Index>(rng.below(4));
        const Mask mask = generate_mask(n, v, {v > 1 ? 0.3 * (v - 1) / v : 0.0, rng.next()});
        const auto part = partition_observed(mask);
        std::vector<Matrix> lifted;
        for (Eigen::Index j = 0; j < v; ++j) {
            const auto& obs = part.observed(static_cast<std::size_t>(j));
            lifted.push_back(lift_graph(random_graph(static_cast<Eigen::Index>(obs.size()), rng.next()),
                                        obs, n));
        }
        const Matrix s = random_graph(n, rng.next());
        const Matrix fused = fuse_graphs(lifted, mask, s);
        CHECK(fused == oracle::dense_mask_fusion(lifted, mask, s));

        // Entry-wise convex combination of the contributing inputs.
        CHECK(fused.minCoeff() >= 0.0);
        CHECK(fused.maxCoeff() <= 1.0);
    }
}

TEST_CASE("write_graph_coo lists non-zero entries") {
    Matrix g = Matrix::Zero(3, 3);
    g(0, 2) = g(2, 0) = 0.25;
    const auto dir = oracle::fresh_dir(MIMVC_TEST_TMP, "coo");
    write_graph_coo(g, dir / "g.csv");
    std::ifstream in(dir / "g.csv");
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) ++rows;
    CHECK(rows == 2);
}
