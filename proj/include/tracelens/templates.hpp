#pragma once

#include "tracelens/checker.hpp"
#include "tracelens/dtmc.hpp"
#include "tracelens/property.hpp"

#include <string>
#include <vector>

namespace tracelens {

// The five analysis templates, instantiated over labels and a step bound N.
//   1  first visit:       P=? [ !"l" U<=N "l" ]
//   2  expected visits:   R{"r_l"}=? [ C<=N ]
//   3  steps to reach:    R{"r_Steps"}=? [ F "l" ]
//   4  reach in-session:  filter(state, P=? [ (!"l1" & !"UseStop") U<=N "l1" ], "l2")
//   5  steps between:     filter(state, R{"r_Steps"}=? [ F "l1" ], "l2")
struct TemplateInstance {
    int template_id = 1; // 1..5
    std::string label1;
    std::string label2; // templates 4 and 5 only
    long horizon = 50; // N; templates 1, 2 and 4 only, N >= 1
};

// The instantiated query text; parses under parse_property.
std::string template_text(const TemplateInstance& instance);
Property template_property(const TemplateInstance& instance);

// Evaluates the instance, synthesizing r_<label> / r_Steps reward
// structures on a copy when the chain lacks them.
double evaluate_template(const Dtmc& dtmc, const TemplateInstance& instance);

double prop1_reach_first(const Dtmc& dtmc, const std::string& l, long n);
double prop2_expected_visits(const Dtmc& dtmc, const std::string& l, long n);
double prop3_expected_steps(const Dtmc& dtmc, const std::string& l);
double prop4_reach_within_session(const Dtmc& dtmc, const std::string& l1,
                                  const std::string& l2, long n);
double prop5_steps_between(const Dtmc& dtmc, const std::string& l1, const std::string& l2);

struct SweepSpec {
    TemplateInstance instance; // template 1, 2 or 4
    long start = 10;
    long stop = 150;
    long step = 10;
};

struct SweepPoint {
    long n;
    double value;
};

// One evaluation per N in {start, start+step, ..., <= stop}. Templates 1
// and 2 produce non-decreasing series.
std::vector<SweepPoint> run_sweep(const Dtmc& dtmc, const SweepSpec& spec);

} // namespace tracelens
