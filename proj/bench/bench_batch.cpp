// Serial reference loop vs. the OpenMP batch on a fixed set of small WeakO runs.
#include "flowmig/experiment/batch.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>

using namespace flowmig;

int main(int argc, char **argv)
{
    const int runs = argc > 1 ? std::atoi(argv[1]) : 64;
    std::vector<fms::Scenario> batch;
    for (int i = 0; i < runs; ++i)
    {
        fms::Scenario sc = fms::default_scenario();
        sc.flow.total_bytes = 400'000;
        sc.t1_s = 0.15;
        sc.seed = static_cast<std::uint64_t>(i + 1);
        batch.push_back(sc);
    }

    auto time = [&](auto fn) {
        const auto t0 = std::chrono::steady_clock::now();
        auto out = fn();
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return std::make_pair(std::move(out), s);
    };
    auto [serial, ts] = time([&] { return experiment::run_batch_serial(batch); });
    auto [parallel, tp] = time([&] { return experiment::run_batch_parallel(batch); });

    std::size_t same = 0;
    for (std::size_t i = 0; i < serial.size(); ++i)
    {
        same += serial[i].goodput_bps == parallel[i].goodput_bps ? 1 : 0;
    }
    std::printf("runs %d threads %d\n", runs, omp_get_max_threads());
    std::printf("serial   %.3f s (%.1f ms/run)\n", ts, 1e3 * ts / runs);
    std::printf("parallel %.3f s (%.1f ms/run)\n", tp, 1e3 * tp / runs);
    std::printf("speedup  %.2fx, identical results %zu/%zu\n", ts / tp, same, serial.size());
    return same == serial.size() ? 0 : 1;
}
