#include "doctest.h"

#include "tracelens/errors.hpp"
#include "tracelens/property.hpp"

#include "common/testing.hpp"

using namespace tracelens;
using testutil::contains;
using testutil::error_message;

TEST_CASE("bounded until query") {
    Property p = parse_property(R"(P=? [ !"TopApps" U<=50 "TopApps" ])");
    CHECK(p.text == R"(P=? [ !"TopApps" U<=50 "TopApps" ])");
    CHECK(p.filter_condition == nullptr);
    REQUIRE(p.formula != nullptr);
    CHECK(p.formula->kind == StateFormula::Kind::Prob);
    CHECK(p.formula->cmp == CompareOp::Query);
    REQUIRE(p.formula->path != nullptr);
    CHECK(p.formula->path->kind == PathFormula::Kind::Until);
    REQUIRE(p.formula->path->bound.has_value());
    CHECK(*p.formula->path->bound == 50);
    CHECK(p.formula->path->lhs->kind == StateFormula::Kind::Not);
    CHECK(p.formula->path->lhs->lhs->name == "TopApps");
    CHECK(p.formula->path->rhs->name == "TopApps");
}

TEST_CASE("next, eventually and unbounded until") {
    Property next = parse_property(R"(P=? [ X "Main" ])");
    CHECK(next.formula->path->kind == PathFormula::Kind::Next);
    CHECK(next.formula->path->lhs->name == "Main");

    // F phi desugars to true U phi
    Property ev = parse_property(R"(P=? [ F "Main" ])");
    CHECK(ev.formula->path->kind == PathFormula::Kind::Until);
    CHECK(!ev.formula->path->bound.has_value());
    CHECK(ev.formula->path->lhs->kind == StateFormula::Kind::True);

    Property bounded_ev = parse_property(R"(P=? [ F<=9 "Main" ])");
    REQUIRE(bounded_ev.formula->path->bound.has_value());
    CHECK(*bounded_ev.formula->path->bound == 9);

    Property u = parse_property(R"(P=? [ "Main" U "Stats" ])");
    CHECK(!u.formula->path->bound.has_value());
    CHECK(u.formula->path->lhs->name == "Main");
}

TEST_CASE("probability bounds and boolean connectives") {
    Property p = parse_property(R"(P>=0.5 [ X "Main" ])");
    CHECK(p.formula->cmp == CompareOp::Ge);
    CHECK(p.formula->threshold == 0.5);

    Property q = parse_property(R"(P<0.25 [ X ("Main" & !"Stats") ])");
    CHECK(q.formula->cmp == CompareOp::Lt);
    CHECK(q.formula->path->lhs->kind == StateFormula::Kind::And);

    // disjunction and implication desugar to not/and
    Property r = parse_property(R"(P=? [ X ("Main" | "Stats") ])");
    CHECK(r.formula->path->lhs->kind == StateFormula::Kind::Not);
    Property s = parse_property(R"(P=? [ X ("Main" => "Stats") ])");
    CHECK(s.formula->path->lhs->kind == StateFormula::Kind::Not);

    Property t = parse_property(R"(P=? [ X true ])");
    CHECK(t.formula->path->lhs->kind == StateFormula::Kind::True);
    Property f = parse_property(R"(P=? [ X false ])");
    CHECK(f.formula->path->lhs->kind == StateFormula::Kind::Not);
}

TEST_CASE("reward queries") {
    Property c = parse_property(R"(R{"r_Main"}=? [ C<=100 ])");
    CHECK(c.formula->kind == StateFormula::Kind::Reward);
    CHECK(c.formula->name == "r_Main");
    CHECK(c.formula->reward_kind == StateFormula::RewardKind::Cumulative);
    CHECK(c.formula->horizon == 100);

    Property f = parse_property(R"(R{"r_Steps"}=? [ F "UseStop" ])");
    CHECK(f.formula->reward_kind == StateFormula::RewardKind::Reachability);
    CHECK(f.formula->target->name == "UseStop");
}

TEST_CASE("filter evaluates a query at a condition state") {
    Property p = parse_property(
        R"(filter(state, P=? [ (!"TopApps" & !"UseStop") U<=25 "TopApps" ], "Main"))");
    REQUIRE(p.filter_condition != nullptr);
    CHECK(p.filter_condition->name == "Main");
    CHECK(p.formula->kind == StateFormula::Kind::Prob);

    Property r = parse_property(R"(filter(state, R{"r_Steps"}=? [ F "Stats" ], "Main"))");
    CHECK(r.formula->kind == StateFormula::Kind::Reward);
}

TEST_CASE("quantitative operators only at the top or as the filter query") {
    CHECK(!error_message<InputError>(
               [] { parse_property(R"(P=? [ X P=? [ X "Main" ] ])"); })
               .empty());
    CHECK(!error_message<InputError>(
               [] { parse_property(R"(P=? [ X R{"r_Steps"}=? [ C<=5 ] ])"); })
               .empty());
    CHECK(!error_message<InputError>(
               [] { parse_property(R"(filter(state, "Main", "Stats"))"); })
               .empty());
    // thresholded P is a plain state formula and nests fine
    Property ok = parse_property(R"(P=? [ X P>=0.5 [ X "Main" ] ])");
    CHECK(ok.formula->path->lhs->kind == StateFormula::Kind::Prob);
}

TEST_CASE("syntax errors name the column") {
    std::string msg = error_message<InputError>([] { parse_property(R"(P=? [ F "x ])"); });
    CHECK(contains(msg, "syntax error at column 9"));
    CHECK(contains(msg, "unterminated"));

    CHECK(contains(error_message<InputError>([] { parse_property("P=? [ F Main ]"); }),
                   "quoted"));
    CHECK(!error_message<InputError>([] { parse_property("P=? [ F \"a\" ] extra"); }).empty());
    CHECK(!error_message<InputError>([] { parse_property(R"(P=? [ "a" U<=-3 "b" ])"); }).empty());
    CHECK(!error_message<InputError>([] { parse_property(R"(P=? [ "a" U<=2.5 "b" ])"); }).empty());
    CHECK(!error_message<InputError>([] { parse_property(R"(P>=1.5 [ X "a" ])"); }).empty());
    CHECK(!error_message<InputError>([] { parse_property(R"(R{r_Steps}=? [ C<=5 ])"); }).empty());
    CHECK(!error_message<InputError>([] { parse_property(R"(R{"r"}=? [ X "a" ])"); }).empty());
    CHECK(!error_message<InputError>([] { parse_property(""); }).empty());
}

TEST_CASE("property files: comments, blank lines, line-tagged errors") {
    const char* text =
        "# steps to stop\n"
        "\n"
        "R{\"r_Steps\"}=? [ F \"UseStop\" ]\n"
        "P=? [ X \"Main\" ]\n";
    auto props = parse_property_file(text, "suite.props");
    REQUIRE(props.size() == 2);
    CHECK(props[0].line == 3);
    CHECK(props[1].line == 4);
    CHECK(props[0].text == "R{\"r_Steps\"}=? [ F \"UseStop\" ]");

    std::string msg = error_message<InputError>(
        [] { parse_property_file("P=? [ X \"Main\" ]\nP=? [ oops ]\n", "suite.props"); });
    CHECK(contains(msg, "suite.props:2"));
}
