#include "tracelens/pipeline.hpp"

#include "tracelens/checker.hpp"
#include "tracelens/errors.hpp"
#include "tracelens/report.hpp"
#include "tracelens/rng.hpp"
#include "tracelens/text_format.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace tracelens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << content;
    if (!out) throw InputError("write failed: " + path);
}

std::string out_path(const PipelineConfig& config, const std::string& name) {
    return (fs::path(config.out_dir) / name).string();
}

void ensure_out_dir(const PipelineConfig& config) {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw InputError("cannot create output directory " + config.out_dir + ": " +
                             ec.message());
}

Vocabulary load_vocabulary(const PipelineConfig& config) {
    if (config.vocab_path.empty()) return Vocabulary::apptracker();
    return Vocabulary::load_file(config.vocab_path);
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') ? c : '-';
    return out;
}

std::string cut_string(const TimeCut& cut) {
    return std::to_string(cut.d1) + ":" + std::to_string(cut.d2);
}

double mean_of(const std::vector<long>& xs) {
    if (xs.empty()) return 0.0;
    double total = 0.0;
    for (long x : xs) total += static_cast<double>(x);
    return total / static_cast<double>(xs.size());
}

double median_of(std::vector<long> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    size_t mid = xs.size() / 2;
    if (xs.size() % 2 == 1) return static_cast<double>(xs[mid]);
    return (static_cast<double>(xs[mid - 1]) + static_cast<double>(xs[mid])) / 2.0;
}

json load_manifest(const PipelineConfig& config, const std::string& name) {
    std::string path = out_path(config, name);
    std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(path + ": manifest parse error at byte " + std::to_string(e.byte) +
                         ": " + e.what());
    }
}

struct ModelRef {
    std::string cut;
    std::string tag;
    int patterns = 0;
    std::string model_file;
};

// infer_manifest entries, narrowed by --cuts / --K when given
std::vector<ModelRef> select_models(const PipelineConfig& config) {
    json manifest = load_manifest(config, "infer_manifest.json");
    if (!manifest.contains("models") || !manifest["models"].is_array())
        throw InputError("infer_manifest.json has no model list");
    std::vector<std::string> want_tags;
    for (const TimeCut& cut : config.cuts) want_tags.push_back(cut_tag(cut));
    std::vector<ModelRef> refs;
    for (const auto& node : manifest["models"]) {
        ModelRef ref;
        ref.cut = node.at("cut").get<std::string>();
        ref.tag = node.at("tag").get<std::string>();
        ref.patterns = node.at("K").get<int>();
        ref.model_file = node.at("model").get<std::string>();
        if (!want_tags.empty() &&
            std::find(want_tags.begin(), want_tags.end(), ref.tag) == want_tags.end())
            continue;
        if (!config.k_values.empty() &&
            std::find(config.k_values.begin(), config.k_values.end(), ref.patterns) ==
                config.k_values.end())
            continue;
        refs.push_back(std::move(ref));
    }
    if (refs.empty())
        throw InputError("no inferred models match the requested cuts/K "
                         "(run the inference step first)");
    return refs;
}

} // namespace

std::array<long, 3> parse_n_range(std::string_view text) {
    std::array<long, 3> range{};
    size_t a = text.find(':');
    size_t b = a == std::string_view::npos ? a : text.find(':', a + 1);
    if (a == std::string_view::npos || b == std::string_view::npos)
        throw InputError("bad N range '" + std::string(text) + "', expected start:stop:step");
    range[0] = static_cast<long>(parse_int(text.substr(0, a), "range start"));
    range[1] = static_cast<long>(parse_int(text.substr(a + 1, b - a - 1), "range stop"));
    range[2] = static_cast<long>(parse_int(text.substr(b + 1), "range step"));
    if (range[0] < 1 || range[1] < range[0] || range[2] < 1)
        throw InputError("bad N range '" + std::string(text) + "': need 1 <= start <= stop, step >= 1");
    return range;
}

std::vector<TimeCut> default_cuts() {
    return parse_time_cuts("0:1,1:7,7:30,0:30,30:60,60:90");
}

AdmixtureModel make_ground_truth(const Vocabulary& vocab, int patterns, int users,
                                 std::uint64_t seed) {
    if (patterns < 1) throw InputError("pattern count must be at least 1");
    if (users < 1) throw InputError("user count must be at least 1");
    const int n = vocab.size();
    const int stop = vocab.stop_state();
    const double stop_mass = 0.15;
    const double dominant_mass = 0.60;
    const double rest = 1.0 - stop_mass - dominant_mass;

    AdmixtureModel model{vocab, {}, {}};
    for (int k = 0; k < patterns; ++k) {
        Eigen::MatrixXd phi(n, n);
        for (int i = 0; i < n; ++i) {
            // stop row matches the inference convention for unvisited states
            if (i == stop) {
                for (int j = 0; j < n; ++j) phi(i, j) = 1.0 / n;
                continue;
            }
            int dominant = (i + 3 * k + 1) % n;
            if (dominant == stop) dominant = (dominant + 1) % n;
            for (int j = 0; j < n; ++j) phi(i, j) = rest / n;
            phi(i, dominant) += dominant_mass;
            phi(i, stop) += stop_mass;
        }
        model.phis.push_back(std::move(phi));
    }
    model.theta.resize(users, patterns);
    Rng rng(seed);
    std::vector<double> row(static_cast<size_t>(patterns));
    for (int m = 0; m < users; ++m) {
        rng.dirichlet(row.data(), patterns);
        for (int k = 0; k < patterns; ++k) model.theta(m, k) = row[static_cast<size_t>(k)];
    }
    return model;
}

void cmd_ingest(const PipelineConfig& config) {
    if (config.input_path.empty())
        throw InputError("ingest needs --input <log.json>");
    ensure_out_dir(config);
    Vocabulary vocab = load_vocabulary(config);
    std::vector<UserRecord> records = load_log(config.input_path, vocab);
    std::vector<TimeCut> cuts = config.cuts.empty() ? default_cuts() : config.cuts;

    json manifest;
    manifest["input"] = config.input_path;
    manifest["users"] = records.size();
    manifest["states"] = vocab.size();
    manifest["cut_start"] = vocab.name(vocab.start_state());
    manifest["cuts"] = json::array();
    for (const TimeCut& cut : cuts) {
        TraceSet set = apply_time_cut(records, cut, vocab);
        json entry;
        entry["cut"] = cut_string(cut);
        entry["tag"] = cut_tag(cut);
        entry["users"] = set.traces.size();
        if (!set.traces.empty()) {
            std::string file = "traces_" + cut_tag(cut) + ".txt";
            save_traces(out_path(config, file), set);
            std::vector<long> lengths;
            long transitions = 0;
            for (const Trace& tr : set.traces) {
                lengths.push_back(static_cast<long>(tr.states.size()));
                transitions += static_cast<long>(tr.states.size()) - 1;
            }
            entry["file"] = file;
            entry["trace_length_mean"] = mean_of(lengths);
            entry["trace_length_median"] = median_of(lengths);
            entry["transitions_total"] = transitions;
        }
        manifest["cuts"].push_back(std::move(entry));
    }
    write_text(out_path(config, "ingest_manifest.json"), manifest.dump(2) + "\n");
    std::cout << "ingest: " << records.size() << " users, " << cuts.size() << " cuts -> "
              << config.out_dir << "\n";
}

void cmd_infer(const PipelineConfig& config) {
    ensure_out_dir(config);
    json ingest = load_manifest(config, "ingest_manifest.json");
    std::vector<std::string> want_tags;
    for (const TimeCut& cut : config.cuts) want_tags.push_back(cut_tag(cut));
    std::vector<int> k_values = config.k_values.empty() ? std::vector<int>{2} : config.k_values;

    json manifest;
    manifest["seed"] = config.seed;
    manifest["models"] = json::array();
    int fitted = 0;
    for (const auto& entry : ingest.at("cuts")) {
        if (!entry.contains("file")) continue;
        std::string tag = entry.at("tag").get<std::string>();
        if (!want_tags.empty() &&
            std::find(want_tags.begin(), want_tags.end(), tag) == want_tags.end())
            continue;
        TraceSet set = load_traces(out_path(config, entry.at("file").get<std::string>()));
        for (int k : k_values) {
            EmConfig em;
            em.patterns = k;
            em.max_iterations = config.max_iterations;
            em.max_restarts = config.max_restarts;
            em.tolerance = config.tolerance;
            em.seed = config.seed;
            em.threads = config.threads;
            em.stop_on_plateau = config.stop_on_plateau;
            EmResult result = infer(set, em);

            std::string stem = tag + "_K" + std::to_string(k);
            std::string model_file = "model_" + stem + ".txt";
            save_model(out_path(config, model_file), result.model);

            std::ostringstream em_log;
            em_log << "restarts " << result.restarts_used << "\n";
            em_log << "best " << result.best_restart << "\n";
            for (size_t r = 0; r < result.restart_histories.size(); ++r)
                em_log << "restart " << r << " iterations "
                       << result.restart_histories[r].size() << " final "
                       << format_double17(result.restart_histories[r].back()) << "\n";
            for (size_t it = 0; it < result.history.size(); ++it)
                em_log << "history " << it << " " << format_double17(result.history[it])
                       << "\n";
            std::string log_file = "em_" + stem + ".log";
            write_text(out_path(config, log_file), em_log.str());

            json prism_files = json::array();
            for (int p = 1; p <= k; ++p) {
                Dtmc pattern = pattern_to_dtmc(result.model, p);
                std::string prism_file = "prism_" + stem + "_AP" + std::to_string(p) + ".pm";
                write_text(out_path(config, prism_file),
                           export_prism(pattern, "AP" + std::to_string(p)));
                prism_files.push_back(prism_file);
            }

            json node;
            node["cut"] = entry.at("cut");
            node["tag"] = tag;
            node["K"] = k;
            node["users"] = set.traces.size();
            node["model"] = model_file;
            node["em_log"] = log_file;
            node["prism"] = std::move(prism_files);
            node["final_log_likelihood"] = result.history.back();
            node["best_restart"] = result.best_restart;
            node["restarts_used"] = result.restarts_used;
            node["iterations"] = result.history.size();
            manifest["models"].push_back(std::move(node));
            ++fitted;
        }
    }
    if (fitted == 0)
        throw InputError("no trace bundles matched the requested cuts "
                         "(run the ingest step first)");
    write_text(out_path(config, "infer_manifest.json"), manifest.dump(2) + "\n");
    std::cout << "infer: " << fitted << " models -> " << config.out_dir << "\n";
}

namespace {

// A check item is either a template instance or a raw parsed query.
struct CheckItem {
    std::string id;
    std::string label;
    std::string query_text;
    std::optional<TemplateInstance> tmpl;
    std::optional<Property> raw;
};

std::vector<std::string> shorthand_tokens(std::string_view line) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        if (i >= line.size()) break;
        if (line[i] == '"') {
            size_t end = line.find('"', i + 1);
            if (end == std::string_view::npos)
                throw InputError("unterminated label");
            // keep the quotes so labels are distinguishable from keywords
            tokens.emplace_back(line.substr(i, end - i + 1));
            i = end + 1;
        } else {
            size_t j = i;
            while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
            tokens.emplace_back(line.substr(i, j - i));
            i = j;
        }
    }
    return tokens;
}

// `template <id> "label" ["label2"] [N=<steps>]`
TemplateInstance parse_shorthand(std::string_view line) {
    std::vector<std::string> tokens = shorthand_tokens(line);
    if (tokens.size() < 3 || tokens[0] != "template")
        throw InputError("bad template shorthand");
    TemplateInstance inst;
    inst.template_id = static_cast<int>(parse_int(tokens[1], "template id"));
    std::vector<std::string> labels;
    bool have_n = false;
    for (size_t i = 2; i < tokens.size(); ++i) {
        const std::string& t = tokens[i];
        if (t.size() >= 2 && t.front() == '"' && t.back() == '"') {
            labels.push_back(t.substr(1, t.size() - 2));
        } else if (t.rfind("N=", 0) == 0) {
            inst.horizon = static_cast<long>(parse_int(t.substr(2), "step bound"));
            have_n = true;
        } else {
            throw InputError("unexpected token '" + t + "' in template shorthand");
        }
    }
    bool two = inst.template_id == 4 || inst.template_id == 5;
    if (labels.size() != (two ? 2u : 1u))
        throw InputError("template " + std::to_string(inst.template_id) + " takes " +
                         (two ? std::string("two labels") : std::string("one label")));
    inst.label1 = labels[0];
    if (two) inst.label2 = labels[1];
    (void)have_n;
    template_text(inst); // validates
    return inst;
}

std::string item_label(const TemplateInstance& inst) {
    if (inst.template_id == 4 || inst.template_id == 5)
        return inst.label1 + "->" + inst.label2;
    return inst.label1;
}

std::vector<CheckItem> load_check_items(const PipelineConfig& config) {
    std::vector<CheckItem> items;
    if (!config.props_path.empty()) {
        std::string text = read_text(config.props_path);
        size_t pos = 0;
        int lineno = 0;
        while (pos < text.size()) {
            size_t eol = text.find('\n', pos);
            if (eol == std::string::npos) eol = text.size();
            std::string line = text.substr(pos, eol - pos);
            pos = eol + 1;
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            size_t first = line.find_first_not_of(" \t");
            if (first == std::string::npos || line[first] == '#') continue;
            try {
                CheckItem item;
                if (line.compare(first, 9, "template ") == 0) {
                    TemplateInstance inst = parse_shorthand(line.substr(first));
                    item.id = "P" + std::to_string(inst.template_id);
                    item.label = item_label(inst);
                    item.query_text = template_text(inst);
                    item.tmpl = inst;
                } else {
                    Property prop = parse_property(line);
                    prop.line = lineno;
                    item.id = "L" + std::to_string(lineno);
                    item.query_text = prop.text;
                    item.raw = std::move(prop);
                }
                items.push_back(std::move(item));
            } catch (const InputError& e) {
                throw InputError(config.props_path + ":" + std::to_string(lineno) + ": " +
                                 e.what());
            }
        }
    }
    if (config.template_instance && !config.n_range) {
        CheckItem item;
        item.id = "P" + std::to_string(config.template_instance->template_id);
        item.label = item_label(*config.template_instance);
        item.query_text = template_text(*config.template_instance);
        item.tmpl = *config.template_instance;
        items.push_back(std::move(item));
    }
    return items;
}

} // namespace

void cmd_check(const PipelineConfig& config) {
    ensure_out_dir(config);
    std::vector<ModelRef> refs = select_models(config);
    bool sweep_mode = config.template_instance && config.n_range;
    std::vector<CheckItem> items = load_check_items(config);
    if (!sweep_mode && items.empty() && config.props_path.empty())
        throw InputError("nothing to check: give --props or --template");

    json manifest;
    manifest["results"] = json::array();
    manifest["sweeps"] = json::array();
    manifest["interpretation"] =
        "templates 1-2: higher means the state is reached more reliably / visited more "
        "often within N steps; templates 3 and 5: lower means fewer expected steps, inf "
        "means the state is unlikely to be reached";

    for (const ModelRef& ref : refs) {
        AdmixtureModel model = load_model(out_path(config, ref.model_file));
        std::vector<Dtmc> patterns;
        for (int p = 1; p <= ref.patterns; ++p) patterns.push_back(pattern_to_dtmc(model, p));

        if (sweep_mode) {
            SweepSpec spec;
            spec.instance = *config.template_instance;
            spec.start = (*config.n_range)[0];
            spec.stop = (*config.n_range)[1];
            spec.step = (*config.n_range)[2];
            std::vector<std::vector<SweepPoint>> series;
            for (const Dtmc& d : patterns) series.push_back(run_sweep(d, spec));

            std::ostringstream csv;
            csv << "N";
            for (int p = 1; p <= ref.patterns; ++p) csv << ",AP" << p;
            csv << "\n";
            for (size_t row = 0; row < series[0].size(); ++row) {
                csv << series[0][row].n;
                for (const auto& s : series) csv << "," << format_double(s[row].value);
                csv << "\n";
            }
            std::string file = "sweep_" + ref.tag + "_K" + std::to_string(ref.patterns) +
                               "_T" + std::to_string(spec.instance.template_id) + "_" +
                               sanitize(spec.instance.label1);
            if (!spec.instance.label2.empty()) file += "_" + sanitize(spec.instance.label2);
            file += ".csv";
            write_text(out_path(config, file), csv.str());
            json node;
            node["cut"] = ref.cut;
            node["K"] = ref.patterns;
            node["file"] = file;
            node["template"] = spec.instance.template_id;
            node["query"] = template_text(spec.instance);
            manifest["sweeps"].push_back(std::move(node));
            continue;
        }

        ResultTable table;
        table.patterns = ref.patterns;
        for (const CheckItem& item : items) {
            ResultRow row;
            row.property_id = item.id;
            row.cut = ref.cut;
            row.label = item.label;
            row.query = item.query_text;
            for (const Dtmc& d : patterns) {
                double v = item.tmpl ? evaluate_template(d, *item.tmpl)
                                     : check(d, *item.raw).value();
                row.values.push_back(v);
            }
            table.rows.push_back(std::move(row));
        }
        std::string file = "results_" + ref.tag + "_K" + std::to_string(ref.patterns) + ".csv";
        write_text(out_path(config, file), results_table_csv(table));
        json node;
        node["cut"] = ref.cut;
        node["K"] = ref.patterns;
        node["file"] = file;
        node["rows"] = table.rows.size();
        manifest["results"].push_back(std::move(node));
    }
    write_text(out_path(config, "check_manifest.json"), manifest.dump(2) + "\n");
    std::cout << "check: " << refs.size() << (sweep_mode ? " sweeps -> " : " tables -> ")
              << config.out_dir << "\n";
}

void cmd_report(const PipelineConfig& config) {
    ensure_out_dir(config);
    std::vector<ModelRef> refs = select_models(config);
    json manifest;
    manifest["artifacts"] = json::array();
    for (const ModelRef& ref : refs) {
        AdmixtureModel model = load_model(out_path(config, ref.model_file));
        for (int p = 1; p <= ref.patterns; ++p) {
            std::string stem = ref.tag + "_K" + std::to_string(ref.patterns) + "_AP" +
                               std::to_string(p);
            std::string curve_file = "theta_" + stem + ".csv";
            write_text(out_path(config, curve_file), theta_curve_csv(theta_curve(model, p)));
            std::string graph_file = "graph_" + stem + ".dot";
            write_text(out_path(config, graph_file),
                       pattern_graph_dot(pattern_to_dtmc(model, p), "AP" + std::to_string(p)));
            json node;
            node["cut"] = ref.cut;
            node["K"] = ref.patterns;
            node["pattern"] = p;
            node["theta_curve"] = curve_file;
            node["graph"] = graph_file;
            manifest["artifacts"].push_back(std::move(node));
        }
    }
    write_text(out_path(config, "report_manifest.json"), manifest.dump(2) + "\n");
    std::cout << "report: " << manifest["artifacts"].size() << " artifacts -> "
              << config.out_dir << "\n";
}

void cmd_synth(const PipelineConfig& config) {
    ensure_out_dir(config);
    Vocabulary vocab = load_vocabulary(config);
    if (config.synth_users < 1 || config.synth_sessions < 1)
        throw InputError("synth needs at least one user and one session per user");

    AdmixtureModel model =
        config.model_path.empty()
            ? make_ground_truth(vocab, config.k_values.empty() ? 2 : config.k_values.front(),
                                config.synth_users, config.seed)
            : load_model(config.model_path);
    const int users = model.user_count();
    const int sessions = config.synth_sessions;

    TraceSet samples = generate_traces(model, sessions, config.seed);

    // session days cover every default analysis window
    static const long kAnchorDays[12] = {0, 1, 3, 5, 8, 12, 20, 25, 35, 45, 65, 80};
    const std::int64_t base = parse_timestamp("2013-08-20 09:00:00");

    std::vector<UserRecord> records(static_cast<size_t>(users));
    for (int m = 0; m < users; ++m) {
        UserRecord& rec = records[static_cast<size_t>(m)];
        std::int64_t first_seen = base + static_cast<std::int64_t>(m) * 60;
        rec.first_seen = first_seen;
        std::int64_t last = first_seen;
        for (int t = 0; t < sessions; ++t) {
            const Trace& tr = samples.traces[static_cast<size_t>(m) * sessions + t];
            long day = kAnchorDays[t % 12];
            std::int64_t at = first_seen + day * 86400 + 30 + static_cast<std::int64_t>(t) * 120;
            Session session;
            for (int s : tr.states) {
                session.events.push_back({at, s});
                at += 2;
            }
            last = std::max(last, session.events.back().timestamp);
            rec.sessions.push_back(std::move(session));
        }
        std::stable_sort(rec.sessions.begin(), rec.sessions.end(),
                         [](const Session& a, const Session& b) {
                             return a.events.front().timestamp < b.events.front().timestamp;
                         });
        rec.last_seen = last;
        std::string id = std::to_string(m);
        rec.device_id = "u" + std::string(5 - std::min<size_t>(5, id.size()), '0') + id;
    }

    std::string log_file = out_path(config, "synth_log.json");
    save_log(log_file, records, vocab);
    save_model(out_path(config, "synth_truth_model.txt"), model);

    json manifest;
    manifest["log"] = "synth_log.json";
    manifest["truth_model"] = "synth_truth_model.txt";
    manifest["users"] = users;
    manifest["sessions_per_user"] = sessions;
    manifest["patterns"] = model.pattern_count();
    manifest["seed"] = config.seed;
    write_text(out_path(config, "synth_manifest.json"), manifest.dump(2) + "\n");
    std::cout << "synth: " << users << " users x " << sessions << " sessions -> " << log_file
              << "\n";
}

} // namespace tracelens
