#include "tracelens/checker.hpp"

#include "tracelens/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace tracelens {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kViTolerance = 1e-10;
constexpr long kViMaxIterations = 50'000'000;

void check_set_size(const Dtmc& dtmc, const std::vector<bool>& set, const char* what) {
    if (static_cast<int>(set.size()) != dtmc.state_count())
        throw InputError(std::string(what) + " set size does not match the state count");
}

// Backward closure: states that can reach `seed` moving only through
// states satisfying `via` (seed states themselves are always in).
std::vector<bool> backward_closure(const Eigen::MatrixXd& P, const std::vector<bool>& via,
                                   const std::vector<bool>& seed) {
    const int n = static_cast<int>(P.rows());
    std::vector<bool> in(seed);
    std::vector<int> stack;
    for (int s = 0; s < n; ++s)
        if (in[s]) stack.push_back(s);
    while (!stack.empty()) {
        int t = stack.back();
        stack.pop_back();
        for (int s = 0; s < n; ++s) {
            if (in[s] || !via[s]) continue;
            if (P(s, t) > 0.0) {
                in[s] = true;
                stack.push_back(s);
            }
        }
    }
    return in;
}

// Solves (I - A) x = b for the index subset `solve`, where A is the chain
// restricted to those states. LU first; if the residual is off or the
// solution is non-finite, falls back to value iteration from zero, which
// converges because the restricted spectral radius is below one.
Eigen::VectorXd solve_restricted(const Eigen::MatrixXd& P, const std::vector<int>& solve,
                                 const Eigen::VectorXd& b) {
    const int m = static_cast<int>(solve.size());
    Eigen::MatrixXd A(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) A(r, c) = P(solve[r], solve[c]);

    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(m, m) - A;
    Eigen::VectorXd x = system.partialPivLu().solve(b);

    double residual = (system * x - b).cwiseAbs().maxCoeff();
    double scale = std::max({1.0, b.cwiseAbs().maxCoeff(), x.cwiseAbs().maxCoeff()});
    if (x.allFinite() && residual <= 1e-8 * scale) return x;

    x.setZero();
    for (long it = 0; it < kViMaxIterations; ++it) {
        Eigen::VectorXd next = b + A * x;
        double delta = (next - x).cwiseAbs().maxCoeff();
        x = next;
        if (delta <= kViTolerance) return x;
    }
    throw NumericError("value iteration did not converge");
}

Eigen::VectorXd path_probability(const Dtmc& dtmc, const PathFormula& path) {
    if (path.kind == PathFormula::Kind::Next)
        return next_prob(dtmc, eval_state_formula(dtmc, *path.lhs));
    std::vector<bool> hold = eval_state_formula(dtmc, *path.lhs);
    std::vector<bool> target = eval_state_formula(dtmc, *path.rhs);
    if (path.bound)
        return bounded_until_prob(dtmc, hold, target, *path.bound);
    return unbounded_until_prob(dtmc, hold, target);
}

Eigen::VectorXd quantitative_value(const Dtmc& dtmc, const StateFormula& f,
                                   CheckResult::Kind& kind) {
    if (f.kind == StateFormula::Kind::Prob && f.cmp == CompareOp::Query) {
        kind = CheckResult::Kind::Probability;
        return path_probability(dtmc, *f.path);
    }
    if (f.kind == StateFormula::Kind::Reward) {
        kind = CheckResult::Kind::Reward;
        if (f.reward_kind == StateFormula::RewardKind::Cumulative)
            return cumulative_reward(dtmc, f.name, f.horizon);
        return reachability_reward(dtmc, f.name, eval_state_formula(dtmc, *f.target));
    }
    throw InputError("expected a quantitative query");
}

} // namespace

std::vector<bool> eval_state_formula(const Dtmc& dtmc, const StateFormula& formula) {
    const int n = dtmc.state_count();
    switch (formula.kind) {
    case StateFormula::Kind::True:
        return std::vector<bool>(n, true);
    case StateFormula::Kind::Atom: {
        std::vector<bool> set(n, false);
        for (int s : dtmc.label_states(formula.name)) set[s] = true;
        return set;
    }
    case StateFormula::Kind::Not: {
        std::vector<bool> set = eval_state_formula(dtmc, *formula.lhs);
        set.flip();
        return set;
    }
    case StateFormula::Kind::And: {
        std::vector<bool> a = eval_state_formula(dtmc, *formula.lhs);
        std::vector<bool> b = eval_state_formula(dtmc, *formula.rhs);
        for (int s = 0; s < n; ++s) a[s] = a[s] && b[s];
        return a;
    }
    case StateFormula::Kind::Prob: {
        if (formula.cmp == CompareOp::Query)
            throw InputError("P=? is a query, not a state formula");
        Eigen::VectorXd v = path_probability(dtmc, *formula.path);
        std::vector<bool> set(n);
        for (int s = 0; s < n; ++s) {
            double p = v(s);
            switch (formula.cmp) {
            case CompareOp::Lt: set[s] = p < formula.threshold; break;
            case CompareOp::Le: set[s] = p <= formula.threshold; break;
            case CompareOp::Gt: set[s] = p > formula.threshold; break;
            case CompareOp::Ge: set[s] = p >= formula.threshold; break;
            case CompareOp::Query: break;
            }
        }
        return set;
    }
    case StateFormula::Kind::Reward:
        throw InputError("R{...}=? is a query, not a state formula");
    }
    throw InputError("unreachable formula kind");
}

Eigen::VectorXd next_prob(const Dtmc& dtmc, const std::vector<bool>& target) {
    check_set_size(dtmc, target, "target");
    const int n = dtmc.state_count();
    Eigen::VectorXd ind(n);
    for (int s = 0; s < n; ++s) ind(s) = target[s] ? 1.0 : 0.0;
    return dtmc.matrix * ind;
}

Eigen::VectorXd bounded_until_prob(const Dtmc& dtmc, const std::vector<bool>& hold,
                                   const std::vector<bool>& target, long n_steps) {
    check_set_size(dtmc, hold, "hold");
    check_set_size(dtmc, target, "target");
    if (n_steps < 0)
        throw InputError("step bound must be non-negative");
    const int n = dtmc.state_count();
    Eigen::VectorXd v(n);
    for (int s = 0; s < n; ++s) v(s) = target[s] ? 1.0 : 0.0;
    for (long t = 0; t < n_steps; ++t) {
        Eigen::VectorXd next = dtmc.matrix * v;
        for (int s = 0; s < n; ++s) {
            if (target[s]) next(s) = 1.0;
            else if (!hold[s]) next(s) = 0.0;
        }
        v = next;
    }
    return v;
}

std::vector<bool> prob0_states(const Dtmc& dtmc, const std::vector<bool>& hold,
                               const std::vector<bool>& target) {
    check_set_size(dtmc, hold, "hold");
    check_set_size(dtmc, target, "target");
    std::vector<bool> reach = backward_closure(dtmc.matrix, hold, target);
    reach.flip();
    return reach;
}

std::vector<bool> prob1_states(const Dtmc& dtmc, const std::vector<bool>& hold,
                               const std::vector<bool>& target) {
    const int n = dtmc.state_count();
    std::vector<bool> zero = prob0_states(dtmc, hold, target);
    // via: hold states that are not targets; they may drift toward a zero state
    std::vector<bool> via(n);
    for (int s = 0; s < n; ++s) via[s] = hold[s] && !target[s];
    std::vector<bool> can_fail = backward_closure(dtmc.matrix, via, zero);
    can_fail.flip();
    return can_fail;
}

Eigen::VectorXd unbounded_until_prob(const Dtmc& dtmc, const std::vector<bool>& hold,
                                     const std::vector<bool>& target) {
    const int n = dtmc.state_count();
    std::vector<bool> zero = prob0_states(dtmc, hold, target);
    std::vector<bool> one = prob1_states(dtmc, hold, target);

    Eigen::VectorXd result(n);
    std::vector<int> solve;
    for (int s = 0; s < n; ++s) {
        if (one[s]) result(s) = 1.0;
        else if (zero[s]) result(s) = 0.0;
        else solve.push_back(s);
    }
    if (solve.empty()) return result;

    Eigen::VectorXd b(solve.size());
    for (size_t r = 0; r < solve.size(); ++r) {
        double into_one = 0.0;
        for (int s = 0; s < n; ++s)
            if (one[s]) into_one += dtmc.matrix(solve[r], s);
        b(static_cast<long>(r)) = into_one;
    }
    Eigen::VectorXd x = solve_restricted(dtmc.matrix, solve, b);
    for (size_t r = 0; r < solve.size(); ++r) result(solve[r]) = x(static_cast<long>(r));
    return result;
}

Eigen::VectorXd cumulative_reward(const Dtmc& dtmc, const RewardStructure& reward,
                                  long horizon) {
    if (horizon < 0)
        throw InputError("reward horizon must be non-negative");
    const int n = dtmc.state_count();
    Eigen::VectorXd step(n);
    if (reward.kind == RewardStructure::Kind::State) {
        if (reward.state_values.size() != n)
            throw InputError("reward structure size does not match the chain");
        step = reward.state_values;
    } else {
        if (reward.transition_values.rows() != n || reward.transition_values.cols() != n)
            throw InputError("reward structure size does not match the chain");
        for (int s = 0; s < n; ++s)
            step(s) = dtmc.matrix.row(s).dot(reward.transition_values.row(s));
    }
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    for (long t = 0; t < horizon; ++t) u = step + dtmc.matrix * u;
    return u;
}

Eigen::VectorXd cumulative_reward(const Dtmc& dtmc, const std::string& reward_name,
                                  long horizon) {
    return cumulative_reward(dtmc, dtmc.reward(reward_name), horizon);
}

Eigen::VectorXd reachability_reward(const Dtmc& dtmc, const RewardStructure& reward,
                                    const std::vector<bool>& target) {
    check_set_size(dtmc, target, "target");
    const int n = dtmc.state_count();
    std::vector<bool> all(n, true);
    std::vector<bool> one = prob1_states(dtmc, all, target);

    Eigen::VectorXd step(n);
    if (reward.kind == RewardStructure::Kind::State) {
        if (reward.state_values.size() != n)
            throw InputError("reward structure size does not match the chain");
        step = reward.state_values;
    } else {
        if (reward.transition_values.rows() != n || reward.transition_values.cols() != n)
            throw InputError("reward structure size does not match the chain");
        for (int s = 0; s < n; ++s)
            step(s) = dtmc.matrix.row(s).dot(reward.transition_values.row(s));
    }

    Eigen::VectorXd result(n);
    std::vector<int> solve;
    for (int s = 0; s < n; ++s) {
        if (target[s]) result(s) = 0.0;
        else if (!one[s]) result(s) = kInf;
        else solve.push_back(s);
    }
    if (solve.empty()) return result;

    Eigen::VectorXd b(solve.size());
    for (size_t r = 0; r < solve.size(); ++r) b(static_cast<long>(r)) = step(solve[r]);
    Eigen::VectorXd x = solve_restricted(dtmc.matrix, solve, b);
    for (size_t r = 0; r < solve.size(); ++r) result(solve[r]) = x(static_cast<long>(r));
    return result;
}

Eigen::VectorXd reachability_reward(const Dtmc& dtmc, const std::string& reward_name,
                                    const std::vector<bool>& target) {
    return reachability_reward(dtmc, dtmc.reward(reward_name), target);
}

CheckResult check(const Dtmc& dtmc, const Property& property) {
    if (!property.formula)
        throw InputError("empty property");
    CheckResult result;
    result.eval_state = dtmc.initial;

    if (property.filter_condition) {
        std::vector<bool> cond = eval_state_formula(dtmc, *property.filter_condition);
        int matched = -1;
        int count = 0;
        for (int s = 0; s < dtmc.state_count(); ++s) {
            if (cond[s]) {
                matched = s;
                ++count;
            }
        }
        if (count != 1)
            throw InputError("filter matched " + std::to_string(count) +
                             " states, need exactly 1");
        result.eval_state = matched;
    }

    const StateFormula& f = *property.formula;
    bool quantitative = (f.kind == StateFormula::Kind::Prob && f.cmp == CompareOp::Query) ||
                        f.kind == StateFormula::Kind::Reward;
    if (quantitative) {
        result.values = quantitative_value(dtmc, f, result.kind);
    } else {
        std::vector<bool> sat = eval_state_formula(dtmc, f);
        result.kind = CheckResult::Kind::Boolean;
        result.values.resize(dtmc.state_count());
        for (int s = 0; s < dtmc.state_count(); ++s) result.values(s) = sat[s] ? 1.0 : 0.0;
    }
    return result;
}

} // namespace tracelens
