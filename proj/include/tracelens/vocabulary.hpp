#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tracelens {

// The view-state alphabet shared by every stage: log parsing, trace
// encoding, inferred pattern chains, exported model labels.
//
// States are dense ids 0..size()-1. Exactly one state is the trace start
// marker and one is the stop marker; they must differ.
class Vocabulary {
public:
    Vocabulary(std::vector<std::string> names, int start_state, int stop_state);

    // The app-tracker alphabet used throughout the docs and defaults:
    // 15 states, start TermsAndConditions (0), stop UseStop (7).
    static Vocabulary apptracker();

    // Tab-separated "id<TAB>name" lines, one per state, ids 0..n-1 in any
    // order. Start and stop are identified by the conventional names
    // TermsAndConditions and UseStop, which must both be present.
    static Vocabulary load_file(const std::string& path);
    static Vocabulary parse(std::string_view text, std::string_view origin = "vocabulary");

    int size() const { return static_cast<int>(names_.size()); }
    const std::string& name(int id) const;
    std::optional<int> find(std::string_view name) const;
    // Throws InputError naming the offender if absent.
    int id_of(std::string_view name) const;

    int start_state() const { return start_; }
    int stop_state() const { return stop_; }

    bool operator==(const Vocabulary& other) const {
        return names_ == other.names_ && start_ == other.start_ && stop_ == other.stop_;
    }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> ids_;
    int start_ = 0;
    int stop_ = 0;
};

} // namespace tracelens
