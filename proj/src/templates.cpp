#include "tracelens/templates.hpp"

#include "tracelens/errors.hpp"

namespace tracelens {

namespace {

void check_label(const std::string& label) {
    if (label.empty())
        throw InputError("template label must not be empty");
    if (label.find('"') != std::string::npos)
        throw InputError("template label must not contain a quote: '" + label + "'");
}

void validate(const TemplateInstance& instance) {
    if (instance.template_id < 1 || instance.template_id > 5)
        throw InputError("template id must be 1..5, got " +
                         std::to_string(instance.template_id));
    check_label(instance.label1);
    bool two_labels = instance.template_id == 4 || instance.template_id == 5;
    if (two_labels)
        check_label(instance.label2);
    else if (!instance.label2.empty())
        throw InputError("template " + std::to_string(instance.template_id) +
                         " takes a single label");
    bool bounded = instance.template_id == 1 || instance.template_id == 2 ||
                   instance.template_id == 4;
    if (bounded && instance.horizon < 1)
        throw InputError("template step bound N must be at least 1");
}

} // namespace

std::string template_text(const TemplateInstance& instance) {
    validate(instance);
    const std::string& l1 = instance.label1;
    const std::string& l2 = instance.label2;
    std::string n = std::to_string(instance.horizon);
    switch (instance.template_id) {
    case 1: return "P=? [ !\"" + l1 + "\" U<=" + n + " \"" + l1 + "\" ]";
    case 2: return "R{\"r_" + l1 + "\"}=? [ C<=" + n + " ]";
    case 3: return "R{\"r_Steps\"}=? [ F \"" + l1 + "\" ]";
    case 4:
        return "filter(state, P=? [ (!\"" + l1 + "\" & !\"UseStop\") U<=" + n + " \"" +
               l1 + "\" ], \"" + l2 + "\")";
    default:
        return "filter(state, R{\"r_Steps\"}=? [ F \"" + l1 + "\" ], \"" + l2 + "\")";
    }
}

Property template_property(const TemplateInstance& instance) {
    return parse_property(template_text(instance));
}

double evaluate_template(const Dtmc& dtmc, const TemplateInstance& instance) {
    Property prop = template_property(instance);
    bool needs_label_reward = instance.template_id == 2;
    bool needs_steps = instance.template_id == 3 || instance.template_id == 5;
    if ((needs_label_reward && !dtmc.rewards.count("r_" + instance.label1)) ||
        (needs_steps && !dtmc.rewards.count("r_Steps")))
        return check(with_standard_rewards(dtmc), prop).value();
    return check(dtmc, prop).value();
}

double prop1_reach_first(const Dtmc& dtmc, const std::string& l, long n) {
    return evaluate_template(dtmc, {1, l, "", n});
}

double prop2_expected_visits(const Dtmc& dtmc, const std::string& l, long n) {
    return evaluate_template(dtmc, {2, l, "", n});
}

double prop3_expected_steps(const Dtmc& dtmc, const std::string& l) {
    return evaluate_template(dtmc, {3, l, "", 1});
}

double prop4_reach_within_session(const Dtmc& dtmc, const std::string& l1,
                                  const std::string& l2, long n) {
    return evaluate_template(dtmc, {4, l1, l2, n});
}

double prop5_steps_between(const Dtmc& dtmc, const std::string& l1, const std::string& l2) {
    return evaluate_template(dtmc, {5, l1, l2, 1});
}

std::vector<SweepPoint> run_sweep(const Dtmc& dtmc, const SweepSpec& spec) {
    int id = spec.instance.template_id;
    if (id != 1 && id != 2 && id != 4)
        throw InputError("template " + std::to_string(id) +
                         " has no step bound to sweep (use 1, 2 or 4)");
    if (spec.step <= 0)
        throw InputError("sweep step must be positive");
    if (spec.start > spec.stop)
        throw InputError("sweep range is empty (start > stop)");
    if (spec.start < 1)
        throw InputError("sweep must start at N >= 1");

    std::vector<SweepPoint> series;
    for (long n = spec.start; n <= spec.stop; n += spec.step) {
        TemplateInstance point = spec.instance;
        point.horizon = n;
        series.push_back({n, evaluate_template(dtmc, point)});
    }
    return series;
}

} // namespace tracelens
