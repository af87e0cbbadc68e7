#pragma once

#include "tracelens/trace_set.hpp"
#include "tracelens/vocabulary.hpp"

#include <Eigen/Core>

#include <map>
#include <string>
#include <vector>

namespace tracelens {

// Reward structure attached to a chain: either one value per state, earned
// on entering a step, or one value per transition. Values are finite and
// non-negative; infinite expectations arise only as checker outputs.
struct RewardStructure {
    enum class Kind { State, Transition };

    Kind kind = Kind::State;
    Eigen::VectorXd state_values;
    Eigen::MatrixXd transition_values;

    static RewardStructure on_states(Eigen::VectorXd values);
    static RewardStructure on_transitions(Eigen::MatrixXd values);
};

// Discrete-time Markov chain with atomic-proposition labels and named
// reward structures. Instances are immutable after construction; checker
// queries never mutate, so one chain can be shared across threads.
struct Dtmc {
    Eigen::MatrixXd matrix; // row-stochastic within 1e-9
    int initial = 0;
    std::map<std::string, std::vector<int>> labels;
    std::map<std::string, RewardStructure> rewards;

    int state_count() const { return static_cast<int>(matrix.rows()); }
    bool has_label(const std::string& name) const { return labels.count(name) != 0; }
    // Throws InputError for unknown names.
    const std::vector<int>& label_states(const std::string& name) const;
    const RewardStructure& reward(const std::string& name) const;
};

// Validates and assembles: square matrix, entries in [0, 1], every row sum
// within 1e-9 of one (no silent renormalization), initial and label states
// in range, reward dimensions matching. Stochasticity violations throw
// NumericError; structural problems throw InputError.
Dtmc build_dtmc(Eigen::MatrixXd matrix, int initial,
                std::map<std::string, std::vector<int>> labels = {},
                std::map<std::string, RewardStructure> rewards = {});

// Normalizes occurrence counts row-wise into a chain over the vocabulary.
// Rows with no observations become absorbing self-loops. Each state gets a
// singleton label with its vocabulary name, plus the standard rewards.
Dtmc trace_to_dtmc(const CountMatrix& counts, const Vocabulary& vocab);

// Distribution over states after exactly t steps from the initial state.
Eigen::VectorXd transient_distribution(const Dtmc& dtmc, long t);

// Copy with "r_<label>" (state reward 1 on the label's states) and
// "r_Steps" (transition reward 1 everywhere) added where missing.
Dtmc with_standard_rewards(const Dtmc& dtmc);

} // namespace tracelens
