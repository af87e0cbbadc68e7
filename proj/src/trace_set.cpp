#include "tracelens/trace_set.hpp"

#include "tracelens/errors.hpp"
#include "tracelens/text_format.hpp"

#include <fstream>
#include <sstream>

namespace tracelens {

CountMatrix count_matrix(const std::vector<int>& trace, const Vocabulary& vocab) {
    const int n = vocab.size();
    if (trace.size() < 2)
        throw InputError("count_matrix: trace must have at least two states, got " +
                         std::to_string(trace.size()));
    CountMatrix counts = CountMatrix::Zero(n, n);
    for (size_t t = 0; t < trace.size(); ++t) {
        if (trace[t] < 0 || trace[t] >= n)
            throw InputError("count_matrix: state id " + std::to_string(trace[t]) +
                             " out of range at position " + std::to_string(t));
        if (t + 1 < trace.size())
            counts(trace[t], trace[t + 1]) += 1;
    }
    return counts;
}

std::string serialize_traces(const TraceSet& set) {
    std::ostringstream out;
    out << "tracelens-traces v1\n";
    out << "states " << set.vocabulary.size() << "\n";
    for (int i = 0; i < set.vocabulary.size(); ++i)
        out << "state " << i << " " << set.vocabulary.name(i) << "\n";
    out << "cutstart " << set.cut_start << "\n";
    for (const Trace& tr : set.traces) {
        out << "trace " << tr.device_id;
        for (int s : tr.states) out << " " << s;
        out << "\n";
    }
    return out.str();
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> parts;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        size_t j = i;
        while (j < line.size() && line[j] != ' ') ++j;
        if (j > i) parts.push_back(line.substr(i, j - i));
        i = j;
    }
    return parts;
}

} // namespace

TraceSet parse_traces(std::string_view text, std::string_view origin) {
    size_t pos = 0;
    int lineno = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        line = text.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = eol + 1;
        ++lineno;
        return true;
    };
    auto fail = [&](const std::string& msg) -> InputError {
        return InputError(std::string(origin) + ":" + std::to_string(lineno) + ": " + msg);
    };

    std::string_view line;
    if (!next_line(line) || line != "tracelens-traces v1")
        throw fail("expected header 'tracelens-traces v1'");
    if (!next_line(line) || line.substr(0, 7) != "states ")
        throw fail("expected 'states <n>'");
    int n = static_cast<int>(parse_int(line.substr(7), "state count"));
    if (n <= 0) throw fail("state count must be positive");

    std::vector<std::string> names(n);
    for (int i = 0; i < n; ++i) {
        if (!next_line(line)) throw fail("unexpected end of file in state list");
        auto parts = split_ws(line);
        if (parts.size() < 3 || parts[0] != "state")
            throw fail("expected 'state <id> <name>'");
        int id = static_cast<int>(parse_int(parts[1], "state id"));
        if (id != i) throw fail("state ids must be ascending from 0");
        size_t name_at = static_cast<size_t>(parts[2].data() - line.data());
        names[i] = std::string(line.substr(name_at));
    }
    int start = -1, stop = -1;
    for (int i = 0; i < n; ++i) {
        if (names[i] == "TermsAndConditions") start = i;
        if (names[i] == "UseStop") stop = i;
    }
    if (start < 0 || stop < 0)
        throw fail("vocabulary must contain TermsAndConditions and UseStop");
    Vocabulary vocab(std::move(names), start, stop);

    if (!next_line(line) || line.substr(0, 9) != "cutstart ")
        throw fail("expected 'cutstart <id>'");
    int cut_start = static_cast<int>(parse_int(line.substr(9), "cut start id"));
    if (cut_start < 0 || cut_start >= n) throw fail("cut start id out of range");

    TraceSet set{std::move(vocab), cut_start, {}};
    while (next_line(line)) {
        if (line.empty()) continue;
        auto parts = split_ws(line);
        if (parts[0] != "trace" || parts.size() < 4)
            throw fail("expected 'trace <device> <id> <id> ...' with at least two states");
        Trace tr;
        tr.device_id = std::string(parts[1]);
        tr.states.reserve(parts.size() - 2);
        for (size_t i = 2; i < parts.size(); ++i) {
            int s = static_cast<int>(parse_int(parts[i], "state id"));
            if (s < 0 || s >= n) throw fail("state id out of range: " + std::to_string(s));
            tr.states.push_back(s);
        }
        if (tr.states.front() != cut_start)
            throw fail("trace for " + tr.device_id + " does not begin with the cut start symbol");
        set.traces.push_back(std::move(tr));
    }
    return set;
}

void save_traces(const std::string& path, const TraceSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write trace file: " + path);
    out << serialize_traces(set);
    if (!out) throw InputError("write failed: " + path);
}

TraceSet load_traces(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open trace file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_traces(ss.str(), path);
}

} // namespace tracelens
