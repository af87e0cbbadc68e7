#pragma once

#include "tracelens/admixture.hpp"
#include "tracelens/log_ingest.hpp"
#include "tracelens/templates.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tracelens {

// Configuration shared by the pipeline commands. Stages hand off through
// files in out_dir: ingest writes trace bundles plus ingest_manifest.json,
// infer reads that manifest and writes models plus infer_manifest.json,
// check and report read the infer manifest. All randomness flows from
// `seed` (EM restart r uses seed+r, synthetic user m uses seed+m).
struct PipelineConfig {
    std::string input_path;
    std::string vocab_path; // empty: built-in app-tracker vocabulary
    std::string props_path;
    std::string model_path; // synth: sample this model instead of the built-in one
    std::string out_dir = ".";

    std::vector<TimeCut> cuts; // empty: the six default analysis cuts
    std::vector<int> k_values; // empty: {2}

    int max_iterations = 100;
    int max_restarts = 200;
    double tolerance = 1e-6;
    std::uint64_t seed = 1;
    int threads = 0; // TRACELENS_THREADS; 1 forces the serial restart driver
    bool stop_on_plateau = false;

    std::optional<TemplateInstance> template_instance;
    std::optional<std::array<long, 3>> n_range; // start, stop, step

    int synth_users = 500;
    int synth_sessions = 12; // sessions per user, spread over 90 days
};

// "10:150:10" -> {10, 150, 10}
std::array<long, 3> parse_n_range(std::string_view text);

std::vector<TimeCut> default_cuts();

// Synthetic ground truth: K well-separated patterns over the vocabulary
// plus user weights drawn from Rng(seed). Deterministic.
AdmixtureModel make_ground_truth(const Vocabulary& vocab, int patterns, int users,
                                 std::uint64_t seed);

// The commands behind the CLI subcommands. They throw InputError (exit 2)
// and NumericError (exit 3); the binary maps exceptions to exit codes.
void cmd_ingest(const PipelineConfig& config);
void cmd_infer(const PipelineConfig& config);
void cmd_check(const PipelineConfig& config);
void cmd_report(const PipelineConfig& config);
void cmd_synth(const PipelineConfig& config);

} // namespace tracelens
