// Times the serial restart driver against the OpenMP one on a synthetic
// workload. The drivers must agree byte for byte; a divergence is a bug,
// not a measurement.
//
// usage: bench_em [users] [restarts] [patterns]

#include "tracelens/admixture.hpp"
#include "tracelens/pipeline.hpp"
#include "tracelens/report.hpp"
#include "tracelens/vocabulary.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

using namespace tracelens;

namespace {

double run(const TraceSet& traces, EmConfig cfg, int threads, std::string& model_text) {
    cfg.threads = threads;
    auto t0 = std::chrono::steady_clock::now();
    EmResult res = infer(traces, cfg);
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    model_text = serialize_model(res.model);
    return dt;
}

} // namespace

int main(int argc, char** argv) {
    int users = argc > 1 ? std::atoi(argv[1]) : 1000;
    int restarts = argc > 2 ? std::atoi(argv[2]) : 32;
    int patterns = argc > 3 ? std::atoi(argv[3]) : 3;
    if (users < 1 || restarts < 1 || patterns < 1) {
        std::fprintf(stderr, "usage: bench_em [users] [restarts] [patterns]\n");
        return 2;
    }

    Vocabulary vocab = Vocabulary::apptracker();
    AdmixtureModel truth = make_ground_truth(vocab, patterns, users, 1);
    TraceSet traces = generate_traces(truth, 4, 1);

    EmConfig cfg;
    cfg.patterns = patterns;
    cfg.max_restarts = restarts;
    cfg.max_iterations = 50;
    cfg.tolerance = 1e-6;
    cfg.seed = 1;

    std::printf("workload: %zu traces, %d patterns, %d restarts\n", traces.traces.size(),
                patterns, restarts);

    std::string serial_model;
    double serial = run(traces, cfg, 1, serial_model);
    std::printf("serial          %8.3fs\n", serial);

    for (int threads : {2, 4, 0}) {
        int effective = threads == 0 ? omp_get_max_threads() : threads;
        std::string model;
        double dt = run(traces, cfg, threads, model);
        std::printf("openmp x%-3d     %8.3fs   speedup %.2fx   %s\n", effective, dt,
                    serial / dt, model == serial_model ? "identical" : "DIVERGED");
        if (model != serial_model) {
            std::fprintf(stderr, "parallel driver diverged from the serial reference\n");
            return 1;
        }
    }
    return 0;
}
