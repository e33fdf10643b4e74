#include "doctest.h"
#include "oracles.hpp"

#include "elastovb/error.hpp"
#include "elastovb/stiefel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <functional>

using namespace elastovb;

namespace {

Mat dense_cayley(const Mat& w, const Mat& b, double alpha) {
    const Mat id = Mat::Identity(w.rows(), w.rows());
    return (id + 0.5 * alpha * b).fullPivLu().solve((id - 0.5 * alpha * b) * w);
}

double defect(const Mat& w) { return (w.transpose() * w - Mat::Identity(w.cols(), w.cols())).cwiseAbs().maxCoeff(); }

// Maximum of F_W over orthonormal W: the smallest eigenvalues of G^T G paired with the
// largest weights (rearrangement / Ky Fan).
double eigen_oracle_fw(const Mat& gram, const Vec& inv_lambda, double tau) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
    const Vec sigma = eig.eigenvalues();  // ascending
    std::vector<double> c(inv_lambda.data(), inv_lambda.data() + inv_lambda.size());
    std::sort(c.rbegin(), c.rend());
    double f = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) f += sigma[Index(i)] * c[i];
    return -0.5 * tau * f;
}

}  // namespace

TEST_CASE("gradient of F_W") {
    std::mt19937_64 rng(1);
    const Mat g = oracle::random_matrix(7, 5, rng);
    const Mat w = oracle::random_orthonormal(5, 2, rng);
    const Vec lambda = (Vec(2) << 0.5, 3.0).finished();
    const double tau = 2.5;

    SUBCASE("zero Jacobian") {
        CHECK(grad_fw(w, Mat::Zero(7, 5), lambda, tau).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("directional derivatives match finite differences") {
        const Mat grad = grad_fw(w, g, lambda, tau);
        for (int k = 0; k < 5; ++k) {
            Mat z = oracle::random_matrix(5, 2, rng);
            z -= w * (w.transpose() * z + z.transpose() * w) / 2.0;  // tangent at w
            const double h = 1e-5;
            const double fd = (objective_fw(w + h * z, g, lambda, tau) - objective_fw(w - h * z, g, lambda, tau)) / (2 * h);
            const double an = (grad.array() * z.array()).sum();
            CHECK(std::abs(fd - an) <= 1e-6 * std::abs(an));
        }
    }
    SUBCASE("linear in the inverse precisions") {
        const Mat g1 = grad_fw(w, g, lambda, tau);
        const Mat g2 = grad_fw(w, g, lambda / 3.0, tau);
        CHECK(oracle::max_rel(g2, 3.0 * g1) <= 1e-14);
    }
    SUBCASE("objective helper agrees with the free functions") {
        const WObjective obj = WObjective::from_jacobian(g, lambda, tau);
        CHECK(obj.value(w) == doctest::Approx(objective_fw(w, g, lambda, tau)).epsilon(1e-12));
        CHECK(oracle::max_rel(obj.gradient(w), grad_fw(w, g, lambda, tau)) <= 1e-12);
        CHECK(obj.value(w) <= 0.0);
    }
}

TEST_CASE("descent skew factor is antisymmetric") {
    std::mt19937_64 rng(2);
    const Mat w = oracle::random_orthonormal(9, 3, rng);
    const SkewFactor b = descent_skew(w, oracle::random_matrix(9, 3, rng));
    const Mat d = b.dense();
    CHECK((d + d.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Cayley step") {
    std::mt19937_64 rng(3);
    SUBCASE("zero skew matrix leaves W unchanged") {
        const Mat w = oracle::random_orthonormal(6, 2, rng);
        const SkewFactor b{Mat::Zero(6, 4), Mat::Zero(6, 4)};
        CHECK(cayley_step(w, b, 0.7).W == w);
    }
    SUBCASE("low-rank form matches the dense inverse") {
        const Mat w = oracle::random_orthonormal(8, 2, rng);
        const SkewFactor b = descent_skew(w, oracle::random_matrix(8, 2, rng));
        const CayleyResult r = cayley_step(w, b, 0.1);
        CHECK(r.alpha == 0.1);
        CHECK((r.W - dense_cayley(w, b.dense(), 0.1)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(defect(r.W) <= 1e-12);
    }
    SUBCASE("full-rank skew factor uses the dense path") {
        const Mat w = oracle::random_orthonormal(5, 3, rng);
        const Mat s = oracle::random_skew(5, rng);
        const CayleyResult r = cayley_step(w, SkewFactor{s, Mat::Identity(5, 5)}, 0.3);
        CHECK((r.W - dense_cayley(w, s, 0.3)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("orthonormality survives 100 consecutive steps") {
        Mat w = oracle::random_orthonormal(8, 2, rng);
        for (int k = 0; k < 100; ++k) {
            w = cayley_step(w, descent_skew(w, oracle::random_matrix(8, 2, rng)), 0.5).W;
        }
        CHECK(defect(w) <= 1e-9);
    }
    SUBCASE("bad input") {
        const Mat w = oracle::random_orthonormal(4, 1, rng);
        CHECK_THROWS_AS(cayley_step(w, descent_skew(w, w), 0.0), InvalidInput);
        CHECK_THROWS_AS(cayley_step(w, SkewFactor{Mat::Zero(3, 2), Mat::Zero(3, 2)}, 1.0), InvalidInput);
    }
}

TEST_CASE("Barzilai-Borwein step") {
    const Mat pad = Mat::Identity(5, 2);
    CHECK(bb_step(pad, pad, 1e-3) == doctest::Approx(1.0));
    CHECK(bb_step(pad, Mat::Zero(5, 2), 1e-3) == 1e-3);
    std::mt19937_64 rng(4);
    const Mat dw = oracle::random_matrix(5, 2, rng);
    const Mat dg = oracle::random_matrix(5, 2, rng);
    const double a = bb_step(dw, dg, 1.0);
    CHECK(a == doctest::Approx(std::abs((dw.transpose() * dg).trace()) / dg.squaredNorm()).epsilon(1e-14));
    CHECK(bb_step(7.0 * dw, 7.0 * dg, 1.0) == doctest::Approx(a).epsilon(1e-14));
    CHECK(bb_step(dw, -dg, 1.0) > 0.0);
}

TEST_CASE("optimizer exits at once for a complete basis with isotropic weights") {
    std::mt19937_64 rng(5);
    const Mat g = oracle::random_matrix(6, 6, rng);
    const Mat w = oracle::random_orthonormal(6, 6, rng);
    const WObjective obj = WObjective::from_jacobian(g, Vec::Constant(6, 2.0), 1.5);
    const StiefelResult r = optimize_w(w, obj);
    CHECK(r.iterations == 0);
    CHECK(r.converged);
    CHECK(r.W == w);
    CHECK(r.fw == doctest::Approx(-0.5 * 1.5 * 0.5 * g.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("single basis converges to the least-informative eigenvector") {
    std::mt19937_64 rng(6);
    const Mat q = oracle::random_orthonormal(10, 10, rng);
    const Vec sig = Vec::LinSpaced(10, 1.0, 10.0);
    const Mat gram = q * sig.asDiagonal() * q.transpose();
    WObjective obj;
    obj.gram = gram;
    obj.inv_lambda = Vec::Constant(1, 0.25);
    obj.tau = 3.0;
    StiefelOptions opts;
    opts.tol = 0.0;
    opts.max_iters = 10000;
    opts.grad_tol = 1e-13;
    const StiefelResult r = optimize_w(oracle::random_orthonormal(10, 1, rng), obj, opts);
    const double cosine = std::abs(r.W.col(0).dot(q.col(0)));
    CHECK(cosine >= 1.0 - 1e-8);
}

TEST_CASE("rank-one Gram matrix: optimum is orthogonal to its range") {
    std::mt19937_64 rng(7);
    const Vec v = oracle::random_orthonormal(8, 1, rng).col(0);
    WObjective obj;
    obj.gram = 4.0 * v * v.transpose();
    obj.inv_lambda = Vec::Constant(1, 1.0);
    obj.tau = 1.0;
    const StiefelResult r = optimize_w(oracle::random_orthonormal(8, 1, rng), obj);
    CHECK(r.fw >= r.fw_initial);
    CHECK(std::abs(r.W.col(0).dot(v)) <= 1e-4);
}

TEST_CASE("three bases on a random 20x20 Gram matrix reach the eigen oracle") {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        std::mt19937_64 rng(seed);
        const Mat g = oracle::random_matrix(25, 20, rng);
        const Vec lambda = (Vec(3) << 0.2, 1.0, 5.0).finished();
        const WObjective obj = WObjective::from_jacobian(g, lambda, 1.0);
        StiefelOptions opts;
        opts.max_iters = 20000;
        opts.tol = 1e-14;
        const StiefelResult r = optimize_w(oracle::random_orthonormal(20, 3, rng), obj, opts);
        const double best = eigen_oracle_fw(obj.gram, obj.inv_lambda, obj.tau);
        CAPTURE(seed);
        CHECK(std::abs(r.fw - best) <= 1e-6 * std::abs(best));
        CHECK(r.fw <= best + 1e-9 * std::abs(best));
        CHECK(defect(r.W) <= 1e-10);
    }
}

TEST_CASE("isotropic weights: any basis of the bottom subspace is optimal") {
    std::mt19937_64 rng(14);
    const Mat g = oracle::random_matrix(15, 12, rng);
    const WObjective obj = WObjective::from_jacobian(g, Vec::Constant(4, 0.5), 2.0);
    StiefelOptions opts;
    opts.max_iters = 20000;
    opts.tol = 1e-14;
    const StiefelResult r = optimize_w(oracle::random_orthonormal(12, 4, rng), obj, opts);
    const double best = eigen_oracle_fw(obj.gram, obj.inv_lambda, obj.tau);
    CHECK(std::abs(r.fw - best) <= 1e-6 * std::abs(best));
}

TEST_CASE("every accepted step stays feasible and F_W stays nonpositive") {
    std::mt19937_64 rng(15);
    const Mat g = oracle::random_matrix(30, 30, rng);
    const Vec lambda = (Vec(5) << 1e-3, 0.1, 1, 10, 100).finished();
    const WObjective obj = WObjective::from_jacobian(g, lambda, 7e3);
    const Mat w0 = oracle::random_orthonormal(30, 5, rng);
    const StiefelResult r = optimize_w(w0, obj);
    REQUIRE(!r.trace.empty());
    for (const auto& row : r.trace) {
        CHECK(row.defect <= 1e-10);
        CHECK(row.fw <= 0.0);
        CHECK(row.alpha > 0.0);
    }
    CHECK(r.fw >= r.fw_initial);
    CHECK(r.fw == doctest::Approx(obj.value(r.W)).epsilon(1e-12));
}

TEST_CASE("badly scaled objectives do not break the Cayley solve") {
    // magnitudes of the reference problem: <tau> ~ 1e8, 1/lambda ~ 1e10
    std::mt19937_64 rng(16);
    const Mat g = 1e-2 * oracle::random_matrix(40, 20, rng);
    const Vec lambda = (Vec(2) << 1e-10, 1e-10).finished();
    const WObjective obj = WObjective::from_jacobian(g, lambda, 7e7);
    StiefelResult r;
    CHECK_NOTHROW(r = optimize_w(oracle::random_orthonormal(20, 2, rng), obj));
    CHECK(r.fw >= r.fw_initial);
    CHECK(defect(r.W) <= 1e-10);
}
