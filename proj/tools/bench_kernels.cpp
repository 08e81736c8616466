// Serial vs OpenMP timing for the parallel kernels: batched marginal fits,
// mean CRPS reduction and the 99-fit quantile-regression bundle.
#include <cstdio>
#include <vector>

#include <functional>

#include "fpld/distribution.hpp"
#include "fpld/estimation.hpp"
#include "fpld/numeric.hpp"
#include "fpld/parallel.hpp"
#include "fpld/quantreg.hpp"
#include "fpld/rng.hpp"
#include "fpld/scoring.hpp"
#include "fpld/simstudy.hpp"

using namespace fpld;

namespace {

double time_of(const char* name, int threads, const std::function<double()>& body) {
    const double start = wall_time_seconds();
    const double checksum = body();
    const double elapsed = wall_time_seconds() - start;
    std::printf("  %-28s threads=%d  %8.3f s   (checksum %.6g)\n", name, threads, elapsed,
                checksum);
    return elapsed;
}

}  // namespace

int main() {
    const int max_threads = resolve_threads(0);
    std::printf("hardware threads: %d\n", max_threads);

    // Batched MQ fits, the simulation-study inner loop.
    {
        std::printf("batched MQ fits (24 x n=4096):\n");
        Rng rng(11);
        std::vector<std::vector<double>> samples;
        for (int i = 0; i < 24; ++i) {
            const FpldStar truth = sample_lambda_star(rng);
            samples.push_back(sample(from_star(truth), 4096, rng.next_u64()));
        }
        auto run = [&](int threads) {
            std::vector<double> losses(samples.size());
            parallel_for(samples.size(), threads, [&](std::size_t i) {
                FitConfig config;
                config.enforce_positive_support = true;
                losses[i] = fit(samples[i], config).loss;
            });
            return pairwise_sum(losses);
        };
        const double serial = time_of("serial reference", 1, [&] { return run(1); });
        const double parallel = time_of("openmp", max_threads, [&] { return run(max_threads); });
        std::printf("  speedup: %.2fx\n", serial / parallel);
    }

    // Mean CRPS over a large sample.
    {
        std::printf("mean CRPS (n=2'000'000):\n");
        const FpldNatural d = from_star(FpldStar{5.0, 4.0, 0.3, 0.2, 0.1});
        const std::vector<double> y = sample(d, 2000000, 99);
        const double serial = time_of("serial reference", 1, [&] { return mean_crps(d, y, 1); });
        const double parallel =
            time_of("openmp", max_threads, [&] { return mean_crps(d, y, max_threads); });
        std::printf("  speedup: %.2fx\n", serial / parallel);
    }

    // Quantile-regression bundle.
    {
        std::printf("quantile-regression bundle (99 fits, n=20'000, k=6):\n");
        Rng rng(5);
        const Eigen::Index n = 20000;
        Eigen::MatrixXd raw(n, 6);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < 6; ++j) raw(i, j) = rng.normal(0.0, 1.0);
            y[i] = 5.0 + raw(i, 0) - 0.5 * raw(i, 1) + rng.normal(0.0, 1.5);
        }
        const Design design = standardize(
            {"x1", "x2", "x3", "x4", "x5", "x6"}, raw, std::move(y));
        auto run = [&](int threads) {
            const QuantileFitBundle bundle = fit_bundle(design, threads);
            double checksum = 0.0;
            for (const QuantileFit& fit : bundle.fits) checksum += fit.beta[0];
            return checksum;
        };
        const double serial = time_of("serial reference", 1, [&] { return run(1); });
        const double parallel = time_of("openmp", max_threads, [&] { return run(max_threads); });
        std::printf("  speedup: %.2fx\n", serial / parallel);
    }
    return 0;
}
