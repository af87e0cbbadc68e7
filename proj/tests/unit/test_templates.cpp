#include "doctest.h"

#include "tracelens/errors.hpp"
#include "tracelens/templates.hpp"

#include "common/testing.hpp"

using namespace tracelens;
using testutil::contains;
using testutil::error_message;

namespace {

// Deterministic-ish browse chain over the app vocabulary:
// TermsAndConditions -> Main -> {TopApps | Stats} -> UseStop (absorbing-ish)
Dtmc browse_chain() {
    Vocabulary v = Vocabulary::apptracker();
    CountMatrix counts = CountMatrix::Zero(15, 15);
    counts(0, 1) = 10;
    counts(1, 2) = 6;  // Main -> TopApps
    counts(1, 8) = 4;  // Main -> Stats
    counts(2, 8) = 3;  // TopApps -> Stats
    counts(2, 7) = 3;  // TopApps -> UseStop
    counts(8, 7) = 5;  // Stats -> UseStop
    counts(7, 0) = 5;  // UseStop -> TermsAndConditions (recycled sessions)
    return trace_to_dtmc(counts, v);
}

} // namespace

TEST_CASE("template texts are pinned") {
    CHECK(template_text({1, "TopApps", "", 50}) ==
          R"(P=? [ !"TopApps" U<=50 "TopApps" ])");
    CHECK(template_text({2, "Stats", "", 25}) == R"(R{"r_Stats"}=? [ C<=25 ])");
    CHECK(template_text({3, "UseStop", "", 50}) == R"(R{"r_Steps"}=? [ F "UseStop" ])");
    CHECK(template_text({4, "TopApps", "Stats", 30}) ==
          R"(filter(state, P=? [ (!"TopApps" & !"UseStop") U<=30 "TopApps" ], "Stats"))");
    CHECK(template_text({5, "TopApps", "Stats", 50}) ==
          R"(filter(state, R{"r_Steps"}=? [ F "TopApps" ], "Stats"))");
}

TEST_CASE("template instances validate") {
    CHECK(!error_message<InputError>([] { template_text({0, "A", "", 50}); }).empty());
    CHECK(!error_message<InputError>([] { template_text({6, "A", "", 50}); }).empty());
    CHECK(!error_message<InputError>([] { template_text({1, "", "", 50}); }).empty());
    CHECK(!error_message<InputError>([] { template_text({1, "A", "B", 50}); }).empty());
    CHECK(!error_message<InputError>([] { template_text({4, "A", "", 50}); }).empty());
    CHECK(!error_message<InputError>([] { template_text({1, "A", "", 0}); }).empty());
    CHECK(!error_message<InputError>([] { template_text({1, "A\"B", "", 50}); }).empty());
    // template 3 carries no bound, so any horizon value is fine
    CHECK(!template_text({3, "A", "", 0}).empty());
}

TEST_CASE("template evaluation equals direct property checking") {
    Dtmc d = browse_chain();
    for (TemplateInstance inst : {TemplateInstance{1, "TopApps", "", 12},
                                  TemplateInstance{2, "Stats", "", 12},
                                  TemplateInstance{3, "UseStop", "", 50},
                                  TemplateInstance{4, "TopApps", "Main", 12},
                                  TemplateInstance{5, "Stats", "Main", 50}}) {
        double via_template = evaluate_template(d, inst);
        double via_property = check(d, template_property(inst)).value();
        CHECK(via_template == via_property);
    }
    // and the convenience wrappers agree too
    CHECK(prop1_reach_first(d, "TopApps", 12) ==
          evaluate_template(d, {1, "TopApps", "", 12}));
    CHECK(prop2_expected_visits(d, "Stats", 12) ==
          evaluate_template(d, {2, "Stats", "", 12}));
    CHECK(prop3_expected_steps(d, "UseStop") ==
          evaluate_template(d, {3, "UseStop", "", 50}));
    CHECK(prop4_reach_within_session(d, "TopApps", "Main", 12) ==
          evaluate_template(d, {4, "TopApps", "Main", 12}));
    CHECK(prop5_steps_between(d, "Stats", "Main") ==
          evaluate_template(d, {5, "Stats", "Main", 50}));
}

TEST_CASE("template values on a hand-checked chain") {
    Dtmc d = browse_chain();
    // reach TopApps first: 0 -> 1 -> 2 with prob 0.6
    CHECK(evaluate_template(d, {1, "TopApps", "", 2}) == doctest::Approx(0.6).epsilon(1e-12));
    // expected steps to UseStop, solved by hand from the leaves up
    double e_stats = 1.0;
    double e_top = 1.0 + 0.5 * e_stats;
    double e_main = 1.0 + 0.6 * e_top + 0.4 * e_stats;
    CHECK(evaluate_template(d, {5, "UseStop", "Main", 50}) ==
          doctest::Approx(e_main).epsilon(1e-12));
}

TEST_CASE("evaluation synthesizes missing rewards") {
    // chain without any reward structures
    Eigen::MatrixXd m(2, 2);
    m << 0.5, 0.5,
         0.0, 1.0;
    Dtmc bare = build_dtmc(m, 0, {{"goal", {1}}, {"UseStop", {1}}});
    CHECK(evaluate_template(bare, {3, "goal", "", 50}) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(evaluate_template(bare, {2, "goal", "", 3}) > 0.0);
    CHECK(evaluate_template(bare, {1, "goal", "", 3}) ==
          doctest::Approx(1.0 - 0.5 * 0.5 * 0.5).epsilon(1e-12));
}

TEST_CASE("sweeps enumerate N and stay monotone for templates 1 and 2") {
    Dtmc d = browse_chain();
    SweepSpec spec;
    spec.instance = {1, "Stats", "", 50};
    spec.start = 10;
    spec.stop = 150;
    spec.step = 10;
    auto points = run_sweep(d, spec);
    REQUIRE(points.size() == 15);
    CHECK(points.front().n == 10);
    CHECK(points.back().n == 150);
    for (size_t i = 1; i < points.size(); ++i) {
        CHECK(points[i].n == points[i - 1].n + 10);
        CHECK(points[i].value >= points[i - 1].value);
    }
    for (const auto& p : points) {
        CHECK(p.value >= 0.0);
        CHECK(p.value <= 1.0);
    }

    spec.instance = {2, "Stats", "", 50};
    auto visits = run_sweep(d, spec);
    for (size_t i = 1; i < visits.size(); ++i) CHECK(visits[i].value >= visits[i - 1].value);

    spec.instance = {4, "TopApps", "Main", 50};
    CHECK(run_sweep(d, spec).size() == 15);

    // stop not on the grid: 10, 17, 24 with stop 25
    spec.instance = {1, "Stats", "", 50};
    spec.start = 10;
    spec.stop = 25;
    spec.step = 7;
    auto ragged = run_sweep(d, spec);
    REQUIRE(ragged.size() == 3);
    CHECK(ragged.back().n == 24);
}

TEST_CASE("sweeps reject unbounded templates and bad ranges") {
    Dtmc d = browse_chain();
    SweepSpec spec;
    spec.instance = {3, "UseStop", "", 50};
    CHECK(!error_message<InputError>([&] { run_sweep(d, spec); }).empty());
    spec.instance = {5, "TopApps", "Stats", 50};
    CHECK(!error_message<InputError>([&] { run_sweep(d, spec); }).empty());

    spec.instance = {1, "Stats", "", 50};
    spec.start = 50;
    spec.stop = 10;
    CHECK(!error_message<InputError>([&] { run_sweep(d, spec); }).empty());
    spec.start = 10;
    spec.stop = 50;
    spec.step = 0;
    CHECK(!error_message<InputError>([&] { run_sweep(d, spec); }).empty());
    spec.step = 10;
    spec.start = 0;
    CHECK(!error_message<InputError>([&] { run_sweep(d, spec); }).empty());
}
