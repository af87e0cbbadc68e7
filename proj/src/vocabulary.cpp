#include "tracelens/vocabulary.hpp"

#include "tracelens/errors.hpp"
#include "tracelens/text_format.hpp"

#include <fstream>
#include <sstream>

namespace tracelens {

namespace {

void check_name(const std::string& name) {
    if (name.empty())
        throw InputError("vocabulary: empty state name");
    for (char c : name)
        if (c == '"' || static_cast<unsigned char>(c) < 0x20)
            throw InputError("vocabulary: state name contains a quote or control character: '" + name + "'");
}

} // namespace

Vocabulary::Vocabulary(std::vector<std::string> names, int start_state, int stop_state)
    : names_(std::move(names)), start_(start_state), stop_(stop_state) {
    if (names_.empty())
        throw InputError("vocabulary: no states");
    for (int i = 0; i < size(); ++i) {
        check_name(names_[i]);
        auto [it, inserted] = ids_.emplace(names_[i], i);
        if (!inserted)
            throw InputError("vocabulary: duplicate state name '" + names_[i] + "'");
    }
    if (start_ < 0 || start_ >= size())
        throw InputError("vocabulary: start state id out of range");
    if (stop_ < 0 || stop_ >= size())
        throw InputError("vocabulary: stop state id out of range");
    if (start_ == stop_)
        throw InputError("vocabulary: start and stop state must differ");
}

Vocabulary Vocabulary::apptracker() {
    return Vocabulary(
        {"TermsAndConditions", "Main", "TopApps", "Last7Days", "PeriodSelector",
         "AppsInPeriod", "Settings", "UseStop", "Stats", "UsageBarChartTopApps",
         "UsageBarChartStats", "Feedback", "UsageBarChartApps", "Info", "Task"},
        0, 7);
}

Vocabulary Vocabulary::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open vocabulary file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

Vocabulary Vocabulary::parse(std::string_view text, std::string_view origin) {
    std::vector<std::pair<int, std::string>> entries;
    size_t pos = 0;
    int lineno = 0;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string_view::npos)
            throw InputError(std::string(origin) + ":" + std::to_string(lineno) +
                             ": expected 'id<TAB>name'");
        std::int64_t id = parse_int(line.substr(0, tab), "state id");
        entries.emplace_back(static_cast<int>(id), std::string(line.substr(tab + 1)));
    }
    if (entries.empty())
        throw InputError(std::string(origin) + ": no states");
    std::vector<std::string> names(entries.size());
    std::vector<bool> seen(entries.size(), false);
    for (auto& [id, name] : entries) {
        if (id < 0 || id >= static_cast<int>(entries.size()) || seen[id])
            throw InputError(std::string(origin) + ": state ids must be 0.." +
                             std::to_string(entries.size() - 1) + " without gaps, got " +
                             std::to_string(id));
        seen[id] = true;
        names[id] = std::move(name);
    }
    int start = -1, stop = -1;
    for (int i = 0; i < static_cast<int>(names.size()); ++i) {
        if (names[i] == "TermsAndConditions") start = i;
        if (names[i] == "UseStop") stop = i;
    }
    if (start < 0)
        throw InputError(std::string(origin) + ": missing start state 'TermsAndConditions'");
    if (stop < 0)
        throw InputError(std::string(origin) + ": missing stop state 'UseStop'");
    return Vocabulary(std::move(names), start, stop);
}

const std::string& Vocabulary::name(int id) const {
    if (id < 0 || id >= size())
        throw InputError("state id " + std::to_string(id) + " out of range (vocabulary has " +
                         std::to_string(size()) + " states)");
    return names_[id];
}

std::optional<int> Vocabulary::find(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

int Vocabulary::id_of(std::string_view name) const {
    auto found = find(name);
    if (!found)
        throw InputError("unknown state name '" + std::string(name) + "'");
    return *found;
}

} // namespace tracelens
