#include <doctest.h>

#include "mimvc/error.hpp"
#include "mimvc/losses.hpp"
#include "mimvc/rng.hpp"

#include <cmath>
#include <numeric>

using namespace mimvc;

namespace {

Matrix randn(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
    return m;
}

Matrix random_weighted_graph(Eigen::Index n, Rng& rng) {
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.uniform();
    a.diagonal().setZero();
    return a;
}

// Each sample gets at least one positive and one negative.
Matrix random_binary_graph(Eigen::Index n, Rng& rng) {
    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            if (rng.uniform() < 0.4) a(i, j) = a(j, i) = 1;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index nb = (i + 1) % n;
        a(i, nb) = a(nb, i) = 1;
        const Eigen::Index far = (i + n / 2) % n;
        if (far != i && far != nb && far != (i + n - 1) % n) a(i, far) = a(far, i) = 0;
    }
    a.diagonal().setZero();
    return a;
}

// Direct transcription of the weighted loss with explicit cosine values.
double reference_wcl(const Matrix& y, const Matrix& a, double tau, double eps) {
    const auto n = y.rows();
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double num = eps, den = eps;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const double s = y.row(i).dot(y.row(j)) / (y.row(i).norm() * y.row(j).norm());
            num += a(i, j) * std::exp(s / tau);
            den += (1 - a(i, j)) * std::exp(s / tau);
        }
        total += -std::log(num / den);
    }
    return total / static_cast<double>(n);
}

double fd_rel_error(Matrix& y, const Matrix& analytic, const std::function<double()>& f) {
    const double h = 1e-6;
    Matrix num(y.rows(), y.cols());
    for (Eigen::Index j = 0; j < y.cols(); ++j)
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            const double s = y(i, j);
            y(i, j) = s + h;
            const double up = f();
            y(i, j) = s - h;
            const double dn = f();
            y(i, j) = s;
            num(i, j) = (up - dn) / (2 * h);
        }
    return (analytic - num).norm() / std::max(analytic.norm(), num.norm());
}

}  // namespace

TEST_CASE("reconstruction_loss examples") {
    Rng rng(1);
    const Matrix z = randn(3, 4, rng);
    CHECK(reconstruction_loss({z}, {z}, 3) == 0.0);

    Matrix orig = Matrix::Zero(2, 2), rec(2, 2);
    rec << 1, 0, 0, 1;
    CHECK(reconstruction_loss({orig}, {rec}, 2) == 1.0);

    const Matrix r = randn(3, 4, rng);
    const double base = reconstruction_loss({z}, {z + r}, 5);
    CHECK(reconstruction_loss({z}, {z + 2 * r}, 5) == doctest::Approx(4 * base).epsilon(1e-14));
    CHECK(base > 0);

    // Observed rows of several views, normalized by the global sample count.
    const Matrix z2 = randn(2, 3, rng), r2 = randn(2, 3, rng);
    std::vector<Matrix> grads;
    const double two = reconstruction_loss({z, z2}, {z + r, z2 + r2}, 4, &grads);
    CHECK(two == doctest::Approx((r.squaredNorm() + r2.squaredNorm()) / 4).epsilon(1e-14));
    CHECK(grads[1].isApprox(2 * r2 / 4, 1e-14));

    CHECK_THROWS_AS(reconstruction_loss({z}, {z2}, 3), std::invalid_argument);
}

TEST_CASE("weighted contrastive loss hand values") {
    Matrix y(2, 2);
    y << 1, 0, 0, 1;
    Matrix a = Matrix::Zero(2, 2);
    a(0, 1) = a(1, 0) = 1;
    CHECK(weighted_contrastive_loss(y, a, 1.0, 1e-12) ==
          doctest::Approx(std::log(1e-12) - std::log(1 + 1e-12)).epsilon(1e-12));
    CHECK(weighted_contrastive_loss(y, a, 1.0, 1e-12) == doctest::Approx(-27.631021).epsilon(1e-7));

    const Matrix zero = Matrix::Zero(2, 2);
    CHECK(weighted_contrastive_loss(y, zero, 1.0, 1e-12) ==
          doctest::Approx(-std::log(1e-12 / (1 + 1e-12))).epsilon(1e-12));
    CHECK(weighted_contrastive_loss(y, zero, 1.0, 1e-12) == doctest::Approx(27.631021).epsilon(1e-7));

    Matrix bad = y;
    bad.row(1).setZero();
    CHECK_THROWS_AS(weighted_contrastive_loss(bad, a, 1.0, 1e-12), std::invalid_argument);
}

TEST_CASE("weighted contrastive loss agrees with a direct transcription") {
    Rng rng(2);
    for (int t = 0; t < 5; ++t) {
        const Matrix y = randn(9, 3, rng);
        const Matrix a = random_weighted_graph(9, rng);
        const double tau = 0.5 + rng.uniform();
        CHECK(weighted_contrastive_loss(y, a, tau, 1e-12) ==
              doctest::Approx(reference_wcl(y, a, tau, 1e-12)).epsilon(1e-12));
    }
}

TEST_CASE("weighted contrastive loss invariances") {
    Rng rng(3);
    const Matrix y = randn(10, 4, rng);
    const Matrix a = random_weighted_graph(10, rng);
    const double base = weighted_contrastive_loss(y, a, 1.0, 1e-12);

    Matrix scaled = y;
    for (Eigen::Index i = 0; i < y.rows(); ++i) scaled.row(i) *= 0.1 + 5 * rng.uniform();
    CHECK(weighted_contrastive_loss(scaled, a, 1.0, 1e-12) == doctest::Approx(base).epsilon(1e-12));

    std::vector<Eigen::Index> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    Matrix yp(10, 4), ap(10, 10);
    for (Eigen::Index i = 0; i < 10; ++i) {
        yp.row(i) = y.row(perm[i]);
        for (Eigen::Index j = 0; j < 10; ++j) ap(i, j) = a(perm[i], perm[j]);
    }
    CHECK(weighted_contrastive_loss(yp, ap, 1.0, 1e-12) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("weighted and decoupled losses agree on binary graphs") {
    Rng rng(4);
    for (Eigen::Index n : {8, 12, 16}) {
        const Matrix y = randn(n, 3, rng);
        const Matrix a = random_binary_graph(n, rng);
        const double w = weighted_contrastive_loss(y, a, 1.0, 1e-12);
        const double d = decoupled_contrastive_loss(y, a, 1.0);
        CHECK(std::abs(w - d) <= 1e-9);
    }
}

TEST_CASE("decoupled contrastive loss examples") {
    // Three orthogonal rows; sample 0 has positive 1 and negative 2.
    Matrix y = Matrix::Identity(3, 3);
    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = a(1, 0) = 1;
    // Samples 0 and 1 each have one positive and one negative at sim 0;
    // sample 2 has no positive and is skipped.
    CHECK(decoupled_contrastive_loss(y, a, 1.0) == doctest::Approx(0.0));

    // Raising the positive pair's similarity lowers the loss.
    Matrix y2 = y;
    y2(1, 0) = 0.5;
    CHECK(decoupled_contrastive_loss(y2, a, 1.0) < decoupled_contrastive_loss(y, a, 1.0));
    Matrix y3 = y;
    y3(1, 0) = 2.0;
    CHECK(decoupled_contrastive_loss(y3, a, 1.0) < decoupled_contrastive_loss(y2, a, 1.0));

    // No sample with both sets: zero loss, zero gradient.
    Matrix g;
    CHECK(decoupled_contrastive_loss(y, Matrix::Zero(3, 3), 1.0, &g) == 0.0);
    CHECK(g.isZero(0));
}

TEST_CASE("standard contrastive loss examples") {
    Matrix y = Matrix::Identity(3, 3);
    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = a(1, 0) = 1;
    // Samples 0 and 1: one positive, one negative, all sims 0 -> log 2 each.
    CHECK(standard_contrastive_loss(y, a, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    // One positive and no negatives -> 0.
    Matrix y2(2, 2);
    y2 << 1, 0, 0, 1;
    Matrix a2 = Matrix::Zero(2, 2);
    a2(0, 1) = a2(1, 0) = 1;
    CHECK(standard_contrastive_loss(y2, a2, 1.0) == doctest::Approx(0.0));

    Rng rng(5);
    const Matrix yr = randn(10, 3, rng);
    const Matrix ar = random_binary_graph(10, rng);
    CHECK(standard_contrastive_loss(yr, ar, 1.0) > 0.0);
}

TEST_CASE("contrastive gradients match finite differences") {
    Rng rng(6);
    Matrix y = randn(6, 3, rng);
    const Matrix a = random_weighted_graph(6, rng);
    const Matrix b = random_binary_graph(6, rng);

    Matrix g;
    weighted_contrastive_loss(y, a, 1.0, 1e-12, false, &g);
    CHECK(fd_rel_error(y, g, [&] { return weighted_contrastive_loss(y, a, 1.0, 1e-12); }) <= 1e-4);

    weighted_contrastive_loss(y, a, 0.5, 1e-12, true, &g);
    CHECK(fd_rel_error(y, g, [&] { return weighted_contrastive_loss(y, a, 0.5, 1e-12, true); }) <=
          1e-4);

    decoupled_contrastive_loss(y, b, 0.7, &g);
    CHECK(fd_rel_error(y, g, [&] { return decoupled_contrastive_loss(y, b, 0.7); }) <= 1e-4);

    standard_contrastive_loss(y, b, 1.3, &g);
    CHECK(fd_rel_error(y, g, [&] { return standard_contrastive_loss(y, b, 1.3); }) <= 1e-4);
}

TEST_CASE("self pairs enter both sums only when requested") {
    Rng rng(7);
    const Matrix y = randn(5, 3, rng);
    const Matrix a = random_weighted_graph(5, rng);
    const double excl = weighted_contrastive_loss(y, a, 1.0, 1e-12, false);
    const double incl = weighted_contrastive_loss(y, a, 1.0, 1e-12, true);
    CHECK(excl != incl);
    // With a zero diagonal the self term adds e^{1/tau} to every denominator.
    double ref = 0;
    for (Eigen::Index i = 0; i < 5; ++i) {
        double num = 1e-12, den = 1e-12 + std::exp(1.0);
        for (Eigen::Index j = 0; j < 5; ++j) {
            if (j == i) continue;
            const double s = y.row(i).normalized().dot(y.row(j).normalized());
            num += a(i, j) * std::exp(s);
            den += (1 - a(i, j)) * std::exp(s);
        }
        ref -= std::log(num / den);
    }
    CHECK(incl == doctest::Approx(ref / 5).epsilon(1e-12));
}

TEST_CASE("total loss and dispatch") {
    CHECK(total_loss(1.5, -2.0, 10.0) == -18.5);
    CHECK(total_loss(0.75, 123.0, 0.0) == 0.75);
    CHECK_THROWS_AS(total_loss(std::nan(""), 0.0, 1.0), TrainingError);
    CHECK_THROWS_AS(total_loss(1.0, INFINITY, 1.0), TrainingError);

    Rng rng(8);
    const Matrix y = randn(6, 2, rng);
    const Matrix a = random_binary_graph(6, rng);
    LossConfig cfg;
    Matrix g;
    CHECK(contrastive_loss(cfg, y, a) == weighted_contrastive_loss(y, a, 1.0, 1e-12));
    cfg.variant = ContrastiveKind::dcl;
    CHECK(contrastive_loss(cfg, y, a) == decoupled_contrastive_loss(y, a, 1.0));
    cfg.variant = ContrastiveKind::cl;
    CHECK(contrastive_loss(cfg, y, a) == standard_contrastive_loss(y, a, 1.0));
    cfg.variant = ContrastiveKind::none;
    CHECK(contrastive_loss(cfg, y, a, &g) == 0.0);
    CHECK(g.isZero(0));

    for (auto k : {ContrastiveKind::wcl, ContrastiveKind::dcl, ContrastiveKind::cl, ContrastiveKind::none})
        CHECK(contrastive_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(contrastive_kind_from_string("infonce"), ConfigError);

    LossConfig badcfg;
    badcfg.tau = 0;
    CHECK_THROWS_AS(badcfg.validate(), ConfigError);
    badcfg = {};
    badcfg.lambda = -1;
    CHECK_THROWS_AS(badcfg.validate(), ConfigError);
}
