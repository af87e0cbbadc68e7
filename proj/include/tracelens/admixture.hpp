#pragma once

#include "tracelens/dtmc.hpp"
#include "tracelens/trace_set.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace tracelens {

// Admixture of K pattern bigram chains over a shared n-state vocabulary.
// phis[k] is row-stochastic n x n; theta row m is user m's mixing weights
// over the K patterns and sums to one. Pattern k is reported as "AP<k+1>".
struct AdmixtureModel {
    Vocabulary vocabulary;
    std::vector<Eigen::MatrixXd> phis;
    Eigen::MatrixXd theta; // M x K

    int pattern_count() const { return static_cast<int>(phis.size()); }
    int user_count() const { return static_cast<int>(theta.rows()); }
    int state_count() const { return vocabulary.size(); }
};

struct EmConfig {
    int patterns = 2;          // K
    int max_iterations = 100;  // per restart
    int max_restarts = 200;
    double tolerance = 1e-6;   // relative log-likelihood change
    std::uint64_t seed = 1;    // restart r draws from seed + r
    int threads = 0;           // 0: OpenMP default; 1: serial reference driver
    bool stop_on_plateau = false; // serial driver only: stop after 25
                                  // restarts without improvement
};

struct EmResult {
    AdmixtureModel model;
    std::vector<double> history; // winning restart's log-likelihood per iteration
    int best_restart = 0;
    int restarts_used = 0;
    std::vector<std::vector<double>> restart_histories;
};

// Log-likelihood of the observed transition counts under the model:
// sum over users and state pairs of x * log(mixture probability), where
// terms with zero count contribute zero. Trace m must belong to user row m.
double log_likelihood(const AdmixtureModel& model, const TraceSet& traces);

// Restart-based EM fit. Each restart initializes every theta row and phi
// row from a symmetric Dirichlet, runs EM to convergence (relative
// log-likelihood change below tolerance) or max_iterations, and the
// restart with the highest final log-likelihood wins, ties to the lowest
// restart index. Per-restart likelihood histories are non-decreasing.
// Restarts run in parallel when threads != 1; results are byte-identical
// across thread counts because every restart is self-contained and seeded
// by its index.
EmResult infer(const TraceSet& traces, const EmConfig& config);

// Samples traces_per_user stop-terminated traces per theta row: each step
// first draws a pattern from the user's theta, then the next state from
// that pattern's row. Traces are truncated at max_length states even
// without a stop. User m uses seed + m.
TraceSet generate_traces(const AdmixtureModel& model, int traces_per_user,
                         std::uint64_t seed, long max_length = 500);

// Extracts pattern k (1-based) as a standalone chain, initial at the
// vocabulary start, singleton name labels and standard rewards attached.
Dtmc pattern_to_dtmc(const AdmixtureModel& model, int k);

// Pattern correspondence between two equally shaped models: the permutation
// of truth patterns that minimizes the total row-wise total-variation
// distance. permutation[k] is the truth pattern matched to inferred k;
// max_row_tv[k] is the largest row TV inside that matched pair.
struct PatternMatch {
    std::vector<int> permutation;
    std::vector<double> max_row_tv;
    double total_tv = 0;
};
PatternMatch match_patterns(const AdmixtureModel& inferred, const AdmixtureModel& truth);

} // namespace tracelens
