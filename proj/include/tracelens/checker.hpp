#pragma once

#include "tracelens/dtmc.hpp"
#include "tracelens/property.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace tracelens {

struct CheckResult {
    enum class Kind { Probability, Reward, Boolean };

    Kind kind = Kind::Boolean;
    Eigen::VectorXd values; // one entry per state; booleans as 0/1
    int eval_state = 0; // initial state, or the filter-matched state

    double value() const { return values(eval_state); }
    bool truth() const { return values(eval_state) != 0.0; }
};

// Boolean satisfaction set of a state formula. Probability operators with a
// comparison bound are evaluated quantitatively and thresholded per state.
// Quantitative queries (=?) are not state formulas and throw here.
std::vector<bool> eval_state_formula(const Dtmc& dtmc, const StateFormula& formula);

// Probability of moving into a target state in exactly one step.
Eigen::VectorXd next_prob(const Dtmc& dtmc, const std::vector<bool>& target);

// P(hold U<=n target) per state, by n backward steps over the chain.
Eigen::VectorXd bounded_until_prob(const Dtmc& dtmc, const std::vector<bool>& hold,
                                   const std::vector<bool>& target, long n);

// P(hold U target). Zero and one states come from graph reachability alone
// (no tolerance); the remaining block solves a linear system by partial-
// pivot LU, with a value-iteration fallback at tolerance 1e-10 when the
// solve shows a bad residual.
Eigen::VectorXd unbounded_until_prob(const Dtmc& dtmc, const std::vector<bool>& hold,
                                     const std::vector<bool>& target);

// States from which P(hold U target) is exactly 0 / exactly 1. Computed
// from the transition graph, so they are exact even when probabilities
// carry rounding noise.
std::vector<bool> prob0_states(const Dtmc& dtmc, const std::vector<bool>& hold,
                               const std::vector<bool>& target);
std::vector<bool> prob1_states(const Dtmc& dtmc, const std::vector<bool>& hold,
                               const std::vector<bool>& target);

// Expected reward accumulated over the first `horizon` steps: state rewards
// for the states entered at steps 0..horizon-1, transition rewards for each
// of the `horizon` transitions taken.
Eigen::VectorXd cumulative_reward(const Dtmc& dtmc, const RewardStructure& reward,
                                  long horizon);
Eigen::VectorXd cumulative_reward(const Dtmc& dtmc, const std::string& reward_name,
                                  long horizon);

// Expected reward until first reaching a target state: zero on targets,
// infinite wherever the target is not reached with probability one (decided
// by graph reachability), a linear solve elsewhere.
Eigen::VectorXd reachability_reward(const Dtmc& dtmc, const RewardStructure& reward,
                                    const std::vector<bool>& target);
Eigen::VectorXd reachability_reward(const Dtmc& dtmc, const std::string& reward_name,
                                    const std::vector<bool>& target);

// Full property evaluation. For filter(state, query, condition) the
// condition must hold in exactly one state, which becomes the evaluation
// state; otherwise the initial state is used.
CheckResult check(const Dtmc& dtmc, const Property& property);

} // namespace tracelens
