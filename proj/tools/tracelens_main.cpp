#include "tracelens/errors.hpp"
#include "tracelens/pipeline.hpp"
#include "tracelens/text_format.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

namespace {

// Flags land here first; cut lists and the template instance need their own
// parsing, which must report through the normal input-error exit code.
struct RawArgs {
    std::string cuts;
    std::string n_range;
    int template_id = 0;
    std::string label;
    std::string label1;
    std::string label2;
    long horizon = 50;
    int threads = -1;
};

void add_cut_option(CLI::App* sub, RawArgs& raw) {
    sub->add_option("--cuts", raw.cuts, "comma-separated day windows, e.g. 0:1,7:30");
}

void add_em_options(CLI::App* sub, tracelens::PipelineConfig& config, RawArgs& raw) {
    sub->add_option("--K", config.k_values, "pattern counts to fit")->delimiter(',');
    sub->add_option("--max-iters", config.max_iterations, "EM iterations per restart");
    sub->add_option("--max-restarts", config.max_restarts, "EM restarts");
    sub->add_option("--tol", config.tolerance, "relative log-likelihood tolerance");
    sub->add_option("--seed", config.seed, "master random seed");
    sub->add_option("--threads", raw.threads, "restart worker threads (overrides TRACELENS_THREADS)");
    sub->add_flag("--stop-on-plateau", config.stop_on_plateau,
                  "stop restarting after 25 without improvement (serial driver)");
}

} // namespace

int main(int argc, char** argv) {
    using namespace tracelens;

    CLI::App app{"tracelens: view-trace ingestion, pattern inference and model checking"};
    app.require_subcommand(1);

    PipelineConfig config;
    RawArgs raw;

    CLI::App* ingest = app.add_subcommand("ingest", "parse a usage log into per-cut trace bundles");
    ingest->add_option("--input", config.input_path, "usage log JSON")->required();
    ingest->add_option("--vocab", config.vocab_path, "vocabulary TSV (default: built-in)");
    ingest->add_option("--out", config.out_dir, "output directory");
    add_cut_option(ingest, raw);

    CLI::App* infer = app.add_subcommand("infer", "fit admixture models to ingested trace bundles");
    infer->add_option("--out", config.out_dir, "directory holding the ingest output");
    add_cut_option(infer, raw);
    add_em_options(infer, config, raw);

    CLI::App* check = app.add_subcommand("check", "evaluate properties against inferred models");
    check->add_option("--out", config.out_dir, "directory holding the inference output");
    add_cut_option(check, raw);
    check->add_option("--K", config.k_values, "pattern counts to check")->delimiter(',');
    check->add_option("--props", config.props_path, "property file, one query per line");
    check->add_option("--template", raw.template_id, "analysis template 1..5");
    check->add_option("--label", raw.label, "label for one-label templates");
    check->add_option("--label1", raw.label1, "first label for two-label templates");
    check->add_option("--label2", raw.label2, "second label for two-label templates");
    check->add_option("--N", raw.horizon, "step bound N");
    check->add_option("--N-range", raw.n_range, "sweep N over start:stop:step");

    CLI::App* report = app.add_subcommand("report", "write theta curves and pattern graphs");
    report->add_option("--out", config.out_dir, "directory holding the inference output");
    add_cut_option(report, raw);
    report->add_option("--K", config.k_values, "pattern counts to report")->delimiter(',');

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic usage log with known patterns");
    synth->add_option("--out", config.out_dir, "output directory");
    synth->add_option("--vocab", config.vocab_path, "vocabulary TSV (default: built-in)");
    synth->add_option("--model", config.model_path, "sample this model file instead of the built-in truth");
    synth->add_option("--K", config.k_values, "pattern count for the built-in truth")->delimiter(',');
    synth->add_option("--users", config.synth_users, "number of users");
    synth->add_option("--sessions", config.synth_sessions, "sessions per user");
    synth->add_option("--seed", config.seed, "master random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (const char* env = std::getenv("TRACELENS_THREADS"))
            config.threads = static_cast<int>(parse_int(env, "TRACELENS_THREADS"));
        if (raw.threads >= 0) config.threads = raw.threads;
        if (config.threads < 0) throw InputError("thread count must be non-negative");

        if (!raw.cuts.empty()) config.cuts = parse_time_cuts(raw.cuts);

        if (raw.template_id != 0) {
            TemplateInstance inst;
            inst.template_id = raw.template_id;
            inst.label1 = raw.label1.empty() ? raw.label : raw.label1;
            inst.label2 = raw.label2;
            inst.horizon = raw.horizon;
            if (inst.label1.empty())
                throw InputError("--template needs --label (or --label1/--label2)");
            template_text(inst); // validates the combination
            config.template_instance = inst;
        } else if (!raw.label.empty() || !raw.label1.empty() || !raw.label2.empty() ||
                   !raw.n_range.empty()) {
            throw InputError("--label/--label1/--label2/--N-range need --template");
        }
        if (!raw.n_range.empty()) config.n_range = parse_n_range(raw.n_range);

        if (ingest->parsed()) cmd_ingest(config);
        else if (infer->parsed()) cmd_infer(config);
        else if (check->parsed()) cmd_check(config);
        else if (report->parsed()) cmd_report(config);
        else if (synth->parsed()) cmd_synth(config);
        return 0;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
