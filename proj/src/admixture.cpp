#include "tracelens/admixture.hpp"

#include "tracelens/errors.hpp"
#include "tracelens/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tracelens {

namespace {

constexpr double kMixFloor = 1e-12;
constexpr int kPlateauWindow = 25;

struct Obs {
    int i;
    int j;
    double x;
};

// Nonzero transition counts per user, row-major order. EM touches only
// these; zero-count pairs contribute nothing to either step.
std::vector<std::vector<Obs>> compress_counts(const TraceSet& traces) {
    std::vector<std::vector<Obs>> users;
    users.reserve(traces.traces.size());
    for (const Trace& tr : traces.traces) {
        CountMatrix counts = count_matrix(tr.states, traces.vocabulary);
        std::vector<Obs> obs;
        for (int i = 0; i < counts.rows(); ++i)
            for (int j = 0; j < counts.cols(); ++j)
                if (counts(i, j) != 0)
                    obs.push_back({i, j, static_cast<double>(counts(i, j))});
        users.push_back(std::move(obs));
    }
    return users;
}

struct RestartOutcome {
    std::vector<Eigen::MatrixXd> phis;
    Eigen::MatrixXd theta;
    std::vector<double> history;
};

// One self-contained EM run. history[t] is the log-likelihood of the
// parameters after t updates; the loop stops before updating past the last
// measured value, so the returned parameters are exactly the ones
// history.back() was computed from.
RestartOutcome run_restart(const std::vector<std::vector<Obs>>& users, int n, int K,
                           int max_iterations, double tolerance, std::uint64_t seed) {
    const int M = static_cast<int>(users.size());
    Rng rng(seed);

    RestartOutcome out;
    out.theta.resize(M, K);
    std::vector<double> buf(static_cast<size_t>(std::max(n, K)));
    for (int m = 0; m < M; ++m) {
        rng.dirichlet(buf.data(), K);
        for (int k = 0; k < K; ++k) out.theta(m, k) = buf[k];
    }
    out.phis.assign(K, Eigen::MatrixXd(n, n));
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < n; ++i) {
            rng.dirichlet(buf.data(), n);
            for (int j = 0; j < n; ++j) out.phis[k](i, j) = buf[j];
        }

    Eigen::MatrixXd theta_acc(M, K);
    std::vector<Eigen::MatrixXd> phi_acc(K, Eigen::MatrixXd(n, n));
    std::vector<double> resp(K);

    for (int iter = 0;; ++iter) {
        theta_acc.setZero();
        for (int k = 0; k < K; ++k) phi_acc[k].setZero();

        double ll = 0.0;
        for (int m = 0; m < M; ++m) {
            for (const Obs& o : users[m]) {
                double mix = 0.0;
                for (int k = 0; k < K; ++k) {
                    resp[k] = out.theta(m, k) * out.phis[k](o.i, o.j);
                    mix += resp[k];
                }
                ll += o.x * std::log(mix);
                double denom = std::max(mix, kMixFloor);
                for (int k = 0; k < K; ++k) {
                    double w = o.x * (resp[k] / denom);
                    theta_acc(m, k) += w;
                    phi_acc[k](o.i, o.j) += w;
                }
            }
        }
        out.history.push_back(ll);

        if (iter > 0) {
            double prev = out.history[out.history.size() - 2];
            double scale = std::abs(prev) > 0 ? std::abs(prev) : 1.0;
            if (std::abs(ll - prev) <= tolerance * scale) break;
        }
        if (iter == max_iterations) break;

        for (int m = 0; m < M; ++m) {
            double total = 0.0;
            for (int k = 0; k < K; ++k) total += theta_acc(m, k);
            for (int k = 0; k < K; ++k) out.theta(m, k) = theta_acc(m, k) / total;
        }
        for (int k = 0; k < K; ++k) {
            for (int i = 0; i < n; ++i) {
                double total = 0.0;
                for (int j = 0; j < n; ++j) total += phi_acc[k](i, j);
                if (total == 0.0) {
                    for (int j = 0; j < n; ++j) out.phis[k](i, j) = 1.0 / n;
                } else {
                    for (int j = 0; j < n; ++j) out.phis[k](i, j) = phi_acc[k](i, j) / total;
                }
            }
        }
    }
    return out;
}

} // namespace

double log_likelihood(const AdmixtureModel& model, const TraceSet& traces) {
    const int K = model.pattern_count();
    const int n = model.state_count();
    if (K == 0)
        throw InputError("model has no patterns");
    if (model.theta.rows() != static_cast<long>(traces.traces.size()))
        throw InputError("model has " + std::to_string(model.theta.rows()) +
                         " user rows but the trace set has " +
                         std::to_string(traces.traces.size()));
    if (traces.vocabulary.size() != n)
        throw InputError("model and trace set vocabulary sizes differ");
    auto users = compress_counts(traces);
    double ll = 0.0;
    for (size_t m = 0; m < users.size(); ++m) {
        for (const Obs& o : users[m]) {
            double mix = 0.0;
            for (int k = 0; k < K; ++k)
                mix += model.theta(static_cast<long>(m), k) * model.phis[k](o.i, o.j);
            ll += o.x * std::log(mix);
        }
    }
    return ll;
}

EmResult infer(const TraceSet& traces, const EmConfig& config) {
    if (traces.traces.empty())
        throw InputError("cannot fit a model to an empty trace set");
    if (config.patterns < 1)
        throw InputError("pattern count must be at least 1");
    if (config.max_iterations < 1 || config.max_restarts < 1)
        throw InputError("iteration and restart limits must be at least 1");
    if (!(config.tolerance > 0))
        throw InputError("convergence tolerance must be positive");

    const int n = traces.vocabulary.size();
    const int K = config.patterns;
    const int R = config.max_restarts;
    auto users = compress_counts(traces);

    std::vector<RestartOutcome> outcomes(R);
    int used = R;

    // Plateau detection needs the restarts in order, so it runs serially.
    const bool serial = config.threads == 1 || config.stop_on_plateau;
    if (serial) {
        double best_ll = -std::numeric_limits<double>::infinity();
        int flat = 0;
        for (int r = 0; r < R; ++r) {
            outcomes[r] = run_restart(users, n, K, config.max_iterations,
                                      config.tolerance, config.seed + static_cast<std::uint64_t>(r));
            double ll = outcomes[r].history.back();
            if (ll > best_ll) {
                best_ll = ll;
                flat = 0;
            } else if (config.stop_on_plateau && ++flat >= kPlateauWindow) {
                used = r + 1;
                break;
            }
        }
    } else {
#ifdef _OPENMP
        int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
        for (int r = 0; r < R; ++r) {
            outcomes[r] = run_restart(users, n, K, config.max_iterations,
                                      config.tolerance, config.seed + static_cast<std::uint64_t>(r));
        }
    }
    outcomes.resize(used);

    int best = -1;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < used; ++r) {
        double ll = outcomes[r].history.back();
        if (!std::isfinite(ll))
            throw NumericError("restart " + std::to_string(r) +
                               " produced a non-finite log-likelihood");
        if (ll > best_ll) {
            best_ll = ll;
            best = r;
        }
    }

    EmResult result{AdmixtureModel{traces.vocabulary, {}, {}}, {}, 0, 0, {}};
    result.model.phis = outcomes[best].phis;
    result.model.theta = outcomes[best].theta;
    result.history = outcomes[best].history;
    result.best_restart = best;
    result.restarts_used = used;
    result.restart_histories.reserve(used);
    for (auto& o : outcomes) result.restart_histories.push_back(std::move(o.history));
    return result;
}

TraceSet generate_traces(const AdmixtureModel& model, int traces_per_user,
                         std::uint64_t seed, long max_length) {
    const int K = model.pattern_count();
    const int n = model.state_count();
    const int M = model.user_count();
    if (K == 0 || M == 0)
        throw InputError("cannot sample from an empty model");
    if (model.theta.cols() != K)
        throw InputError("theta column count does not match the pattern count");
    for (const auto& phi : model.phis)
        if (phi.rows() != n || phi.cols() != n)
            throw InputError("pattern matrix shape does not match the vocabulary");
    if (traces_per_user < 1)
        throw InputError("traces_per_user must be at least 1");
    if (max_length < 2)
        throw InputError("max_length must be at least 2");

    const int start = model.vocabulary.start_state();
    const int stop = model.vocabulary.stop_state();
    std::vector<double> theta_row(K);

    TraceSet set{model.vocabulary, start, {}};
    set.traces.reserve(static_cast<size_t>(M) * traces_per_user);
    int digits = M <= 100000 ? 5 : 9;
    for (int m = 0; m < M; ++m) {
        Rng rng(seed + static_cast<std::uint64_t>(m));
        for (int k = 0; k < K; ++k) theta_row[k] = model.theta(m, k);
        for (int t = 0; t < traces_per_user; ++t) {
            Trace tr;
            std::string id = std::to_string(m);
            tr.device_id = "u" + std::string(digits - std::min<size_t>(digits, id.size()), '0') + id;
            if (traces_per_user > 1) tr.device_id += "-" + std::to_string(t);
            tr.states.push_back(start);
            int cur = start;
            while (static_cast<long>(tr.states.size()) < max_length) {
                int k = rng.categorical(theta_row.data(), K);
                Eigen::RowVectorXd row = model.phis[k].row(cur);
                int next = rng.categorical(row.data(), n);
                tr.states.push_back(next);
                cur = next;
                if (cur == stop) break;
            }
            set.traces.push_back(std::move(tr));
        }
    }
    return set;
}

Dtmc pattern_to_dtmc(const AdmixtureModel& model, int k) {
    if (k < 1 || k > model.pattern_count())
        throw InputError("pattern index " + std::to_string(k) + " out of range 1.." +
                         std::to_string(model.pattern_count()));
    const Vocabulary& vocab = model.vocabulary;
    std::map<std::string, std::vector<int>> labels;
    for (int i = 0; i < vocab.size(); ++i) labels[vocab.name(i)] = {i};
    Dtmc d = build_dtmc(model.phis[k - 1], vocab.start_state(), std::move(labels));
    return with_standard_rewards(d);
}

PatternMatch match_patterns(const AdmixtureModel& inferred, const AdmixtureModel& truth) {
    const int K = inferred.pattern_count();
    const int n = inferred.state_count();
    if (truth.pattern_count() != K || truth.state_count() != n)
        throw InputError("pattern matching requires models of the same shape");
    if (K > 6)
        throw InputError("pattern matching supports at most 6 patterns");

    auto row_tv = [n](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int row) {
        double d = 0.0;
        for (int j = 0; j < n; ++j) d += std::abs(a(row, j) - b(row, j));
        return 0.5 * d;
    };

    // summed row TV for every (inferred, truth) pattern pair
    Eigen::MatrixXd dist(K, K);
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) {
            double total = 0.0;
            for (int i = 0; i < n; ++i) total += row_tv(inferred.phis[a], truth.phis[b], i);
            dist(a, b) = total;
        }

    std::vector<int> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best_perm = perm;
    double best_total = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int k = 0; k < K; ++k) total += dist(k, perm[k]);
        if (total < best_total) {
            best_total = total;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    PatternMatch match;
    match.permutation = best_perm;
    match.total_tv = best_total;
    match.max_row_tv.resize(K);
    for (int k = 0; k < K; ++k) {
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            worst = std::max(worst, row_tv(inferred.phis[k], truth.phis[best_perm[k]], i));
        match.max_row_tv[k] = worst;
    }
    return match;
}

} // namespace tracelens
