#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tracelens {

// AST for the probabilistic temporal property language. Disjunction,
// implication, 'false' and 'F' are desugared at parse time, so evaluation
// only ever sees the kinds below.

struct StateFormula;
using StateFormulaPtr = std::unique_ptr<StateFormula>;

enum class CompareOp { Query, Lt, Le, Gt, Ge };

struct PathFormula {
    enum class Kind { Next, Until };

    Kind kind = Kind::Next;
    StateFormulaPtr lhs; // Next operand, or the Until hold formula
    StateFormulaPtr rhs; // Until target
    std::optional<long> bound; // Until only; empty means unbounded
};

struct StateFormula {
    enum class Kind { True, Atom, Not, And, Prob, Reward };
    enum class RewardKind { Cumulative, Reachability };

    Kind kind = Kind::True;
    int pos = 0; // column in the source text, 1-based

    std::string name; // Atom: label; Reward: structure name
    StateFormulaPtr lhs, rhs; // Not uses lhs; And uses both

    // Prob: P cmp threshold [ path ], or P=? when cmp is Query
    CompareOp cmp = CompareOp::Query;
    double threshold = 0.0;
    std::unique_ptr<PathFormula> path;

    // Reward: always a query (=?)
    RewardKind reward_kind = RewardKind::Cumulative;
    long horizon = 0; // Cumulative
    StateFormulaPtr target; // Reachability
};

// One checkable property: either a bare formula, or filter(state, query,
// condition) where the query is evaluated at the unique state satisfying
// the condition.
struct Property {
    StateFormulaPtr formula;
    StateFormulaPtr filter_condition; // null unless filter(...)
    std::string text; // source text, used to tag results
    int line = 0; // within a property file, 1-based; 0 for standalone
};

// Quantitative queries (P=?, R{...}=?) are only legal at the top level or
// as the filter query; the parser rejects them anywhere deeper. Unknown
// labels and reward structure names are checked at evaluation, not here.
// Syntax errors throw InputError naming the column.
Property parse_property(std::string_view text);

// One property per non-empty line; '#' starts a comment line. Errors carry
// the line number.
std::vector<Property> parse_property_file(std::string_view text,
                                          std::string_view origin = "properties");

} // namespace tracelens
