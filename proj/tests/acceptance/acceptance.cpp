// End-to-end acceptance gate. Eight checks, one PASS/FAIL line each, exit
// status is the number of failures. The pipeline checks share one scratch
// directory under the system temp root; it is removed on success and kept
// for inspection when something fails.

#include "common/oracles.hpp"
#include "tracelens/admixture.hpp"
#include "tracelens/checker.hpp"
#include "tracelens/dtmc.hpp"
#include "tracelens/errors.hpp"
#include "tracelens/log_ingest.hpp"
#include "tracelens/pipeline.hpp"
#include "tracelens/report.hpp"
#include "tracelens/rng.hpp"
#include "tracelens/templates.hpp"
#include "tracelens/text_format.hpp"
#include "tracelens/trace_set.hpp"
#include "tracelens/vocabulary.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace tracelens;

namespace {

struct Outcome {
    bool ok = true;
    std::string note;
};

Outcome pass(double seconds) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), " (%.1fs)", seconds);
    return {true, buf};
}

Outcome fail(const std::string& why) { return {false, ": " + why}; }

Outcome fail_slow(const char* what, double seconds, double limit) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s finished in %.1fs, limit %.0fs", what, seconds, limit);
    return fail(buf);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::vector<std::string> non_empty_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

// Fields in the files checked here never contain embedded commas.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
}

bool contains(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

// Pipeline commands narrate progress on stdout; keep the gate's output to
// one line per check.
struct CoutSilencer {
    std::ostringstream sink;
    std::streambuf* saved = std::cout.rdbuf(sink.rdbuf());
    ~CoutSilencer() { std::cout.rdbuf(saved); }
};

// Artifacts shared between the pipeline-grid check and the curve check.
struct PipelineRun {
    fs::path dir;
    std::vector<TimeCut> cuts;
    std::vector<int> ks{2, 3, 4, 5};
    bool inferred = false;
};
PipelineRun g_run;

Outcome checker_vs_enumeration() {
    auto t0 = Clock::now();
    Rng rng(8821);
    const char* names[2] = {"a", "b"};
    const char* reward_names[2] = {"r_cost", "r_hop"};
    for (int rep = 0; rep < 200; ++rep) {
        int n = 2 + static_cast<int>(rng.uniform() * 4.0);
        Dtmc d = testutil::random_dtmc(rng, n);
        std::vector<bool> sets[2];
        for (int s = 0; s < 2; ++s) {
            std::vector<bool> mask(static_cast<size_t>(n), false);
            for (int i : d.label_states(names[s])) mask[static_cast<size_t>(i)] = true;
            sets[s] = std::move(mask);
        }
        for (int b = 0; b < 2; ++b) {
            Eigen::VectorXd got = next_prob(d, sets[b]);
            for (int s = 0; s < n; ++s) {
                double want = testutil::enum_next(d, sets[b], s);
                if (std::abs(got(s) - want) > 1e-9)
                    return fail("next probability off at chain " + std::to_string(rep) +
                                ", state " + std::to_string(s));
            }
            for (int a = 0; a < 2; ++a)
                for (long nn = 0; nn <= 6; ++nn) {
                    Eigen::VectorXd until = bounded_until_prob(d, sets[a], sets[b], nn);
                    for (int s = 0; s < n; ++s) {
                        double want = testutil::enum_bounded_until(d, sets[a], sets[b], s, nn);
                        if (std::abs(until(s) - want) > 1e-9)
                            return fail("bounded until off at chain " + std::to_string(rep) +
                                        ", state " + std::to_string(s) + ", bound " +
                                        std::to_string(nn));
                    }
                }
        }
        for (const char* rname : reward_names)
            for (long nn = 0; nn <= 6; ++nn) {
                Eigen::VectorXd got = cumulative_reward(d, rname, nn);
                for (int s = 0; s < n; ++s) {
                    double want = testutil::enum_cumulative_reward(d, d.reward(rname), s, nn);
                    if (std::abs(got(s) - want) > 1e-9)
                        return fail(std::string("cumulative ") + rname + " off at chain " +
                                    std::to_string(rep) + ", state " + std::to_string(s) +
                                    ", horizon " + std::to_string(nn));
                }
            }
    }
    double dt = seconds_since(t0);
    if (dt >= 30.0) return fail_slow("enumeration sweep", dt, 30.0);
    return pass(dt);
}

Outcome closed_forms() {
    auto t0 = Clock::now();

    // 0.5 escape per step to an absorbing goal
    Eigen::MatrixXd g(2, 2);
    g << 0.5, 0.5,
         0.0, 1.0;
    Dtmc escape = build_dtmc(g, 0, {{"goal", {1}}});
    for (long n = 1; n <= 30; ++n) {
        double want = 1.0 - std::ldexp(1.0, static_cast<int>(-n));
        double got = prop1_reach_first(escape, "goal", n);
        if (std::abs(got - want) > 1e-12)
            return fail("escape chain first-visit probability off at bound " +
                        std::to_string(n) + ": " + format_double(got));
    }
    double steps = prop3_expected_steps(escape, "goal");
    if (std::abs(steps - 2.0) > 1e-12)
        return fail("escape chain expected steps " + format_double(steps) + ", want 2");

    // one coin flip into either an absorbing goal or an absorbing dead end
    Eigen::MatrixXd s(3, 3);
    s << 0.0, 0.5, 0.5,
         0.0, 1.0, 0.0,
         0.0, 0.0, 1.0;
    Dtmc split = build_dtmc(s, 0, {{"goal", {1}}});
    double half = prop1_reach_first(split, "goal", 50);
    if (std::abs(half - 0.5) > 1e-12)
        return fail("split chain first-visit probability " + format_double(half) + ", want 0.5");
    double unreachable = prop3_expected_steps(split, "goal");
    if (!std::isinf(unreachable))
        return fail("split chain expected steps " + format_double(unreachable) + ", want inf");

    double dt = seconds_since(t0);
    if (dt >= 1.0) return fail_slow("closed forms", dt, 1.0);
    return pass(dt);
}

Outcome em_monotone_deterministic() {
    auto t0 = Clock::now();
    Vocabulary vocab = Vocabulary::apptracker();
    AdmixtureModel truth = make_ground_truth(vocab, 2, 500, 97);
    TraceSet traces = generate_traces(truth, 3, 97);

    EmConfig cfg;
    cfg.patterns = 2;
    cfg.max_restarts = 20;
    cfg.max_iterations = 100;
    cfg.tolerance = 1e-6;
    cfg.seed = 97;
    EmResult first = infer(traces, cfg);

    for (size_t r = 0; r < first.restart_histories.size(); ++r) {
        const auto& h = first.restart_histories[r];
        for (size_t t = 1; t < h.size(); ++t)
            if (h[t] < h[t - 1] - 1e-9 * std::max(1.0, std::abs(h[t - 1])))
                return fail("likelihood drops in restart " + std::to_string(r) +
                            " at iteration " + std::to_string(t) + ": " +
                            format_double(h[t - 1]) + " -> " + format_double(h[t]));
    }

    EmResult second = infer(traces, cfg);
    if (serialize_model(first.model) != serialize_model(second.model))
        return fail("rerun with the same seed produced a different model");
    if (first.history != second.history || first.best_restart != second.best_restart ||
        first.restart_histories != second.restart_histories)
        return fail("rerun with the same seed produced different histories");

    double dt = seconds_since(t0);
    if (dt >= 60.0) return fail_slow("EM runs", dt, 60.0);
    return pass(dt);
}

Outcome em_recovery() {
    auto t0 = Clock::now();
    Vocabulary vocab = Vocabulary::apptracker();
    const int n = vocab.size();
    const int stop = vocab.stop_state();
    const int users = 500;
    const int traces_per_user = 16;

    // Two planted patterns: each non-stop row puts 0.78 on a pattern-specific
    // target, 0.002 extra on stop, the rest uniform. Stop rows are uniform,
    // matching the convention for rows the traces never leave.
    std::vector<Eigen::MatrixXd> phis;
    for (int k = 0; k < 2; ++k) {
        Eigen::MatrixXd phi = Eigen::MatrixXd::Constant(n, n, 0.218 / n);
        for (int i = 0; i < n; ++i) {
            if (i == stop) {
                phi.row(i).setConstant(1.0 / n);
                continue;
            }
            int dom = (i + 3 * k + 1) % n;
            if (dom == stop) dom = (dom + 1) % n;
            phi(i, dom) += 0.78;
            phi(i, stop) += 0.002;
        }
        phis.push_back(std::move(phi));
    }
    for (int i = 0; i < n; ++i) {
        if (i == stop) continue;
        double tv = 0.5 * (phis[0].row(i) - phis[1].row(i)).cwiseAbs().sum();
        if (tv < 0.5)
            return fail("planted patterns too close at row " + std::to_string(i));
    }

    Eigen::MatrixXd theta(users, 2);
    Rng rng(311);
    for (int m = 0; m < users; ++m) {
        double row[2];
        rng.dirichlet(row, 2);
        theta(m, 0) = row[0];
        theta(m, 1) = row[1];
    }
    AdmixtureModel truth{vocab, phis, theta};
    TraceSet traces = generate_traces(truth, traces_per_user, 311);

    EmConfig cfg;
    cfg.patterns = 2;
    cfg.max_restarts = 5;
    cfg.max_iterations = 100;
    cfg.tolerance = 1e-6;
    cfg.seed = 311;
    EmResult res = infer(traces, cfg);

    PatternMatch match = match_patterns(res.model, truth);
    double worst_tv = std::max(match.max_row_tv[0], match.max_row_tv[1]);
    if (worst_tv > 0.05)
        return fail("worst row TV " + format_double(worst_tv) + ", limit 0.05");

    double err = 0.0;
    for (int m = 0; m < users; ++m)
        for (int t = 0; t < traces_per_user; ++t) {
            int row = m * traces_per_user + t;
            for (int k = 0; k < 2; ++k)
                err += std::abs(res.model.theta(row, k) - theta(m, match.permutation[k]));
        }
    double mean_err = err / (users * traces_per_user * 2);
    if (mean_err > 0.1)
        return fail("mean weight error " + format_double(mean_err) + ", limit 0.1");

    double dt = seconds_since(t0);
    if (dt >= 60.0) return fail_slow("recovery", dt, 60.0);
    char buf[96];
    std::snprintf(buf, sizeof(buf), " (%.1fs, worst row TV %.3f, mean weight error %.3f)", dt,
                  worst_tv, mean_err);
    return {true, buf};
}

Outcome single_pattern_closed_form() {
    auto t0 = Clock::now();
    Vocabulary vocab = Vocabulary::apptracker();
    const int n = vocab.size();
    AdmixtureModel truth = make_ground_truth(vocab, 2, 60, 7);
    TraceSet traces = generate_traces(truth, 2, 7);

    EmConfig cfg;
    cfg.patterns = 1;
    cfg.max_restarts = 1;
    cfg.max_iterations = 50;
    cfg.tolerance = 1e-9;
    cfg.seed = 7;
    EmResult res = infer(traces, cfg);

    CountMatrix total = CountMatrix::Zero(n, n);
    for (const Trace& tr : traces.traces) total += count_matrix(tr.states, vocab);

    const Eigen::MatrixXd& phi = res.model.phis[0];
    for (int i = 0; i < n; ++i) {
        double row_sum = static_cast<double>(total.row(i).sum());
        for (int j = 0; j < n; ++j) {
            double want = row_sum > 0.0 ? static_cast<double>(total(i, j)) / row_sum : 1.0 / n;
            if (std::abs(phi(i, j) - want) > 1e-12)
                return fail("pooled entry (" + std::to_string(i) + "," + std::to_string(j) +
                            ") is " + format_double(phi(i, j)) + ", want " + format_double(want));
        }
    }
    for (int m = 0; m < res.model.user_count(); ++m)
        if (res.model.theta(m, 0) != 1.0)
            return fail("single-pattern weight row " + std::to_string(m) + " is not one");
    return pass(seconds_since(t0));
}

Outcome pipeline_grid() {
    auto t0 = Clock::now();
    CoutSilencer quiet;
    g_run.dir = fs::temp_directory_path() /
                ("tracelens-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(g_run.dir);
    fs::create_directories(g_run.dir);
    g_run.cuts = default_cuts();
    const std::string dir = g_run.dir.string();

    PipelineConfig synth;
    synth.out_dir = dir;
    synth.seed = 41;
    synth.synth_users = 150;
    synth.synth_sessions = 12;
    synth.k_values = {2};
    cmd_synth(synth);

    PipelineConfig ingest;
    ingest.out_dir = dir;
    ingest.input_path = (g_run.dir / "synth_log.json").string();
    ingest.cuts = g_run.cuts;
    cmd_ingest(ingest);

    PipelineConfig infer_cfg;
    infer_cfg.out_dir = dir;
    infer_cfg.cuts = g_run.cuts;
    infer_cfg.k_values = g_run.ks;
    infer_cfg.max_restarts = 4;
    infer_cfg.max_iterations = 25;
    infer_cfg.tolerance = 1e-6;
    infer_cfg.seed = 41;
    cmd_infer(infer_cfg);
    g_run.inferred = true;

    const std::vector<std::string> labels = {"Main", "TopApps", "Stats", "Settings",
                                             "AppsInPeriod"};
    std::ostringstream props;
    for (int tmpl : {1, 2})
        for (const std::string& l : labels)
            props << "template " << tmpl << " \"" << l << "\" N=50\n";
    for (const std::string& l : labels) props << "template 3 \"" << l << "\"\n";
    {
        std::ofstream out(g_run.dir / "grid.props", std::ios::binary);
        out << props.str();
    }

    PipelineConfig check_cfg;
    check_cfg.out_dir = dir;
    check_cfg.cuts = g_run.cuts;
    check_cfg.k_values = g_run.ks;
    check_cfg.props_path = (g_run.dir / "grid.props").string();
    cmd_check(check_cfg);

    for (const TimeCut& cut : g_run.cuts)
        for (int k : g_run.ks) {
            std::string name = "results_" + cut_tag(cut) + "_K" + std::to_string(k) + ".csv";
            auto lines = non_empty_lines(read_file(g_run.dir / name));
            if (lines.size() != 16)
                return fail(name + " has " + std::to_string(lines.size()) + " lines, want 16");
            std::string header = "property,cut,label";
            for (int p = 1; p <= k; ++p) header += ",AP" + std::to_string(p);
            header += ",query";
            if (lines[0] != header) return fail(name + " header is '" + lines[0] + "'");
            int per_property[4] = {0, 0, 0, 0};
            for (size_t r = 1; r < lines.size(); ++r) {
                auto fields = split_csv(lines[r]);
                if (fields.size() != static_cast<size_t>(4 + k))
                    return fail(name + " row " + std::to_string(r) + " has " +
                                std::to_string(fields.size()) + " fields, want " +
                                std::to_string(4 + k));
                if (fields[0] == "P1") ++per_property[1];
                else if (fields[0] == "P2") ++per_property[2];
                else if (fields[0] == "P3") ++per_property[3];
                else return fail(name + " row " + std::to_string(r) + " has id " + fields[0]);
                std::string cut_text = std::to_string(cut.d1) + ":" + std::to_string(cut.d2);
                if (fields[1] != cut_text)
                    return fail(name + " row " + std::to_string(r) + " names cut " + fields[1]);
                if (std::find(labels.begin(), labels.end(), fields[2]) == labels.end())
                    return fail(name + " row " + std::to_string(r) + " names label " + fields[2]);
                for (int p = 0; p < k; ++p) {
                    const std::string& cell = fields[static_cast<size_t>(3 + p)];
                    if (cell == "inf") {
                        if (fields[0] != "P3")
                            return fail(name + " row " + std::to_string(r) +
                                        " has an infinite bounded value");
                        continue;
                    }
                    double v = parse_double(cell, "value");
                    if (fields[0] == "P1" && (v < 0.0 || v > 1.0))
                        return fail(name + " row " + std::to_string(r) +
                                    " has probability " + cell);
                    if (v < 0.0)
                        return fail(name + " row " + std::to_string(r) +
                                    " has negative value " + cell);
                }
            }
            if (per_property[1] != 5 || per_property[2] != 5 || per_property[3] != 5)
                return fail(name + " does not hold five rows per property");
        }

    struct SweepCase {
        int tmpl;
        std::string label;
    };
    for (const SweepCase& sweep : {SweepCase{1, "TopApps"}, SweepCase{2, "Main"}}) {
        PipelineConfig sweep_cfg;
        sweep_cfg.out_dir = dir;
        sweep_cfg.cuts = g_run.cuts;
        sweep_cfg.k_values = {2};
        sweep_cfg.template_instance = TemplateInstance{sweep.tmpl, sweep.label, "", 50};
        sweep_cfg.n_range = std::array<long, 3>{10, 150, 10};
        cmd_check(sweep_cfg);

        for (const TimeCut& cut : g_run.cuts) {
            std::string name = "sweep_" + cut_tag(cut) + "_K2_T" + std::to_string(sweep.tmpl) +
                               "_" + sweep.label + ".csv";
            auto lines = non_empty_lines(read_file(g_run.dir / name));
            if (lines.size() != 16)
                return fail(name + " has " + std::to_string(lines.size()) + " lines, want 16");
            if (lines[0] != "N,AP1,AP2") return fail(name + " header is '" + lines[0] + "'");
            double prev[2] = {-1.0, -1.0};
            for (size_t r = 1; r < lines.size(); ++r) {
                auto fields = split_csv(lines[r]);
                if (fields.size() != 3)
                    return fail(name + " row " + std::to_string(r) + " is malformed");
                long want_n = 10 * static_cast<long>(r);
                if (parse_int(fields[0], "N") != want_n)
                    return fail(name + " row " + std::to_string(r) + " has N " + fields[0]);
                for (int p = 0; p < 2; ++p) {
                    double v = parse_double(fields[static_cast<size_t>(1 + p)], "value");
                    if (v < prev[p] - 1e-12)
                        return fail(name + " column AP" + std::to_string(p + 1) +
                                    " decreases at N " + fields[0]);
                    if (sweep.tmpl == 1 && (v < 0.0 || v > 1.0))
                        return fail(name + " holds probability " +
                                    fields[static_cast<size_t>(1 + p)]);
                    prev[p] = v;
                }
            }
        }
    }
    return pass(seconds_since(t0));
}

Outcome prism_round_trip() {
    auto t0 = Clock::now();
    Vocabulary vocab = Vocabulary::apptracker();
    const int n = vocab.size();
    Rng rng(5150);

    for (int rep = 0; rep < 50; ++rep) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        std::vector<double> weights(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            std::vector<int> support;
            for (int j = 0; j < n; ++j)
                if (rng.uniform() < 0.65) support.push_back(j);
            if (support.empty())
                support.push_back(static_cast<int>(rng.uniform() * n));
            rng.dirichlet(weights.data(), static_cast<int>(support.size()));
            for (size_t s = 0; s < support.size(); ++s)
                m(i, support[s]) = weights[s];
        }
        std::map<std::string, std::vector<int>> labels;
        for (int i = 0; i < n; ++i) labels[vocab.name(i)] = {i};
        Dtmc d = with_standard_rewards(build_dtmc(std::move(m), vocab.start_state(), labels));

        std::string text = export_prism(d, "AP1");
        for (const char* token : {"module AP1", "endmodule", "label \"Main\"",
                                  "rewards \"r_Main\"", "rewards \"r_Steps\""})
            if (!contains(text, token))
                return fail("export " + std::to_string(rep) + " lacks '" + token + "'");

        Dtmc back = import_prism(text, "acceptance");
        if (back.state_count() != n || back.initial != d.initial)
            return fail("export " + std::to_string(rep) + " changed shape or initial state");
        if ((back.matrix - d.matrix).cwiseAbs().maxCoeff() > 1e-12)
            return fail("export " + std::to_string(rep) + " perturbed the matrix");
        if (back.labels != d.labels)
            return fail("export " + std::to_string(rep) + " perturbed the labels");
        if (back.rewards.size() != d.rewards.size())
            return fail("export " + std::to_string(rep) + " changed the reward count");
        for (const auto& [rname, want] : d.rewards) {
            auto it = back.rewards.find(rname);
            if (it == back.rewards.end())
                return fail("export " + std::to_string(rep) + " dropped " + rname);
            const RewardStructure& got = it->second;
            if (got.kind != want.kind)
                return fail("export " + std::to_string(rep) + " changed the kind of " + rname);
            double diff = want.kind == RewardStructure::Kind::State
                              ? (got.state_values - want.state_values).cwiseAbs().maxCoeff()
                              : (got.transition_values - want.transition_values)
                                    .cwiseAbs()
                                    .maxCoeff();
            if (diff > 1e-12)
                return fail("export " + std::to_string(rep) + " perturbed " + rname);
        }
    }
    return pass(seconds_since(t0));
}

Outcome weight_curves() {
    auto t0 = Clock::now();
    CoutSilencer quiet;
    if (!g_run.inferred) return fail("no inferred models, the pipeline check did not run");

    PipelineConfig report_cfg;
    report_cfg.out_dir = g_run.dir.string();
    report_cfg.cuts = g_run.cuts;
    report_cfg.k_values = g_run.ks;
    cmd_report(report_cfg);

    for (const TimeCut& cut : g_run.cuts)
        for (int k : g_run.ks) {
            std::string tag = cut_tag(cut);
            AdmixtureModel model =
                load_model((g_run.dir / ("model_" + tag + "_K" + std::to_string(k) + ".txt"))
                               .string());
            for (int m = 0; m < model.user_count(); ++m) {
                double sum = model.theta.row(m).sum();
                if (std::abs(sum - 1.0) > 1e-9)
                    return fail("model " + tag + " K" + std::to_string(k) + " weight row " +
                                std::to_string(m) + " sums to " + format_double(sum));
            }
            for (int p = 1; p <= k; ++p) {
                std::string name =
                    "theta_" + tag + "_K" + std::to_string(k) + "_AP" + std::to_string(p) + ".csv";
                auto lines = non_empty_lines(read_file(g_run.dir / name));
                if (lines.size() != static_cast<size_t>(model.user_count()) + 1)
                    return fail(name + " has " + std::to_string(lines.size()) + " lines");
                if (lines[0] != "x,theta") return fail(name + " header is '" + lines[0] + "'");
                double prev_x = -1.0, prev_y = -1.0;
                for (size_t r = 1; r < lines.size(); ++r) {
                    auto fields = split_csv(lines[r]);
                    if (fields.size() != 2)
                        return fail(name + " row " + std::to_string(r) + " is malformed");
                    double x = parse_double(fields[0], "x");
                    double y = parse_double(fields[1], "theta");
                    if (x < prev_x || x < 0.0 || x > 1.0)
                        return fail(name + " x column leaves [0,1] or decreases at row " +
                                    std::to_string(r));
                    if (y < prev_y || y < 0.0 || y > 1.0)
                        return fail(name + " curve leaves [0,1] or decreases at row " +
                                    std::to_string(r));
                    prev_x = x;
                    prev_y = y;
                }
            }
        }
    return pass(seconds_since(t0));
}

} // namespace

int main() {
    struct Entry {
        const char* name;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {"checker agrees with exhaustive path enumeration on 200 random chains (tol 1e-9)",
         checker_vs_enumeration},
        {"closed-form chains are answered exactly (tol 1e-12)", closed_forms},
        {"EM histories never decrease (tol 1e-9) and reruns are byte-identical",
         em_monotone_deterministic},
        {"EM recovers planted patterns (row TV <= 0.05, mean weight error <= 0.1)", em_recovery},
        {"single-pattern fit equals pooled normalized counts (tol 1e-12)",
         single_pattern_closed_form},
        {"pipeline emits the full analysis grid and monotone sweeps", pipeline_grid},
        {"PRISM export round-trips 50 random models (tol 1e-12)", prism_round_trip},
        {"pattern weight curves are monotone in [0,1] and weight rows normalized",
         weight_curves},
    };

    int failures = 0;
    for (const Entry& entry : entries) {
        Outcome outcome;
        try {
            outcome = entry.fn();
        } catch (const std::exception& e) {
            outcome = fail(std::string("unexpected error: ") + e.what());
        }
        std::printf("%s: %s%s\n", outcome.ok ? "PASS" : "FAIL", entry.name,
                    outcome.note.c_str());
        std::fflush(stdout);
        failures += outcome.ok ? 0 : 1;
    }
    if (failures == 0 && !g_run.dir.empty()) {
        std::error_code ec;
        fs::remove_all(g_run.dir, ec);
    } else if (!g_run.dir.empty()) {
        std::printf("scratch kept at %s\n", g_run.dir.string().c_str());
    }
    return failures;
}
