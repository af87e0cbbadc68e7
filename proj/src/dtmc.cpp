#include "tracelens/dtmc.hpp"

#include "tracelens/errors.hpp"

#include <cmath>

namespace tracelens {

RewardStructure RewardStructure::on_states(Eigen::VectorXd values) {
    RewardStructure r;
    r.kind = Kind::State;
    r.state_values = std::move(values);
    return r;
}

RewardStructure RewardStructure::on_transitions(Eigen::MatrixXd values) {
    RewardStructure r;
    r.kind = Kind::Transition;
    r.transition_values = std::move(values);
    return r;
}

const std::vector<int>& Dtmc::label_states(const std::string& name) const {
    auto it = labels.find(name);
    if (it == labels.end())
        throw InputError("unknown label \"" + name + "\"");
    return it->second;
}

const RewardStructure& Dtmc::reward(const std::string& name) const {
    auto it = rewards.find(name);
    if (it == rewards.end())
        throw InputError("unknown reward structure \"" + name + "\"");
    return it->second;
}

namespace {

void check_reward_values(const std::string& name, const double* v, long count) {
    for (long i = 0; i < count; ++i) {
        if (!std::isfinite(v[i]) || v[i] < 0)
            throw InputError("reward structure \"" + name +
                             "\" has a negative or non-finite value");
    }
}

} // namespace

Dtmc build_dtmc(Eigen::MatrixXd matrix, int initial,
                std::map<std::string, std::vector<int>> labels,
                std::map<std::string, RewardStructure> rewards) {
    const long n = matrix.rows();
    if (n == 0 || matrix.cols() != n)
        throw InputError("transition matrix must be square and non-empty");
    for (long i = 0; i < n; ++i) {
        double sum = 0.0;
        for (long j = 0; j < n; ++j) {
            double p = matrix(i, j);
            if (!(p >= 0.0 && p <= 1.0))
                throw NumericError("transition probability out of [0,1] at (" +
                                   std::to_string(i) + "," + std::to_string(j) + "): " +
                                   std::to_string(p));
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw NumericError("row " + std::to_string(i) + " sums to " +
                               std::to_string(sum) + ", not 1 within 1e-9");
    }
    if (initial < 0 || initial >= n)
        throw InputError("initial state out of range");
    for (const auto& [name, states] : labels) {
        if (name.empty())
            throw InputError("empty label name");
        for (int s : states)
            if (s < 0 || s >= n)
                throw InputError("label \"" + name + "\" refers to state " +
                                 std::to_string(s) + ", out of range");
    }
    for (const auto& [name, r] : rewards) {
        if (r.kind == RewardStructure::Kind::State) {
            if (r.state_values.size() != n)
                throw InputError("reward structure \"" + name + "\" has " +
                                 std::to_string(r.state_values.size()) +
                                 " state values, chain has " + std::to_string(n));
            check_reward_values(name, r.state_values.data(), n);
        } else {
            if (r.transition_values.rows() != n || r.transition_values.cols() != n)
                throw InputError("reward structure \"" + name +
                                 "\" transition matrix shape mismatch");
            check_reward_values(name, r.transition_values.data(), n * n);
        }
    }
    Dtmc d;
    d.matrix = std::move(matrix);
    d.initial = initial;
    d.labels = std::move(labels);
    d.rewards = std::move(rewards);
    return d;
}

Dtmc trace_to_dtmc(const CountMatrix& counts, const Vocabulary& vocab) {
    const int n = vocab.size();
    if (counts.rows() != n || counts.cols() != n)
        throw InputError("count matrix shape does not match the vocabulary");
    Eigen::MatrixXd matrix = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        std::int64_t row_total = 0;
        for (int j = 0; j < n; ++j) {
            if (counts(i, j) < 0)
                throw InputError("negative occurrence count at (" + std::to_string(i) +
                                 "," + std::to_string(j) + ")");
            row_total += counts(i, j);
        }
        if (row_total == 0) {
            matrix(i, i) = 1.0; // unobserved state: absorbing
        } else {
            for (int j = 0; j < n; ++j)
                matrix(i, j) = static_cast<double>(counts(i, j)) /
                               static_cast<double>(row_total);
        }
    }
    std::map<std::string, std::vector<int>> labels;
    for (int i = 0; i < n; ++i) labels[vocab.name(i)] = {i};
    Dtmc d = build_dtmc(std::move(matrix), vocab.start_state(), std::move(labels));
    return with_standard_rewards(d);
}

Eigen::VectorXd transient_distribution(const Dtmc& dtmc, long t) {
    if (t < 0)
        throw InputError("step count must be non-negative");
    const int n = dtmc.state_count();
    Eigen::RowVectorXd dist = Eigen::RowVectorXd::Zero(n);
    dist(dtmc.initial) = 1.0;
    for (long step = 0; step < t; ++step) dist = dist * dtmc.matrix;
    return dist.transpose();
}

Dtmc with_standard_rewards(const Dtmc& dtmc) {
    Dtmc out = dtmc;
    const int n = out.state_count();
    for (const auto& [name, states] : out.labels) {
        std::string rname = "r_" + name;
        if (out.rewards.count(rname)) continue;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
        for (int s : states) v(s) = 1.0;
        out.rewards.emplace(std::move(rname), RewardStructure::on_states(std::move(v)));
    }
    if (!out.rewards.count("r_Steps"))
        out.rewards.emplace("r_Steps",
                            RewardStructure::on_transitions(Eigen::MatrixXd::Ones(n, n)));
    return out;
}

} // namespace tracelens
