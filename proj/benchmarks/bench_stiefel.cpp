#include "elastovb/stiefel.hpp"

#include <benchmark/benchmark.h>

#include <Eigen/QR>

#include <random>

using namespace elastovb;

namespace {

Mat gaussian(Index r, Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Mat m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
    return m;
}

Mat orthonormal(Index r, Index c, std::mt19937_64& rng) {
    const Eigen::HouseholderQR<Mat> qr(gaussian(r, c, rng));
    return qr.householderQ() * Mat::Identity(r, c);
}

void BM_CayleyStep(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const Index d = 90, p = state.range(0);
    const Mat w = orthonormal(d, p, rng);
    const SkewFactor b = descent_skew(w, gaussian(d, p, rng));
    for (auto _ : state) {
        benchmark::DoNotOptimize(cayley_step(w, b, 0.1));
    }
}
BENCHMARK(BM_CayleyStep)->Arg(1)->Arg(6)->Arg(20)->Arg(45);

void BM_OptimizeW(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const Index d = 90, p = state.range(0);
    const Mat g = gaussian(198, d, rng);
    Vec lambda(p);
    for (Index i = 0; i < p; ++i) lambda[i] = 1.0 + double(i);
    const WObjective obj = WObjective::from_jacobian(g, lambda, 1.0);
    const Mat w0 = orthonormal(d, p, rng);
    StiefelOptions o;
    o.max_iters = 100;
    for (auto _ : state) {
        benchmark::DoNotOptimize(optimize_w(w0, obj, o));
    }
}
BENCHMARK(BM_OptimizeW)->Arg(1)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace
