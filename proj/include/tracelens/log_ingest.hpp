#pragma once

#include "tracelens/trace_set.hpp"
#include "tracelens/vocabulary.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tracelens {

struct LogEvent {
    std::int64_t timestamp; // seconds since epoch, UTC
    int state;

    bool operator==(const LogEvent&) const = default;
};

// One app session: non-empty, timestamps non-decreasing, and after parsing
// always terminated by the stop state (appended with the last event's
// timestamp when the log lacks it).
struct Session {
    std::vector<LogEvent> events;

    bool operator==(const Session&) const = default;
};

struct UserRecord {
    std::string device_id;
    std::int64_t first_seen; // install time; may precede the first event
    std::int64_t last_seen;
    std::vector<Session> sessions; // sorted by first event timestamp

    bool operator==(const UserRecord&) const = default;
};

// Half-open day window [d1, d2), day offsets relative to each user's own
// first_seen.
struct TimeCut {
    long d1;
    long d2;
};

TimeCut parse_time_cut(std::string_view text); // "0:30"
std::vector<TimeCut> parse_time_cuts(std::string_view text); // "0:1,1:7,7:30"
std::string cut_tag(const TimeCut& cut); // "cut0to30", used in file names

// Parses the usage-log JSON: an array of user objects with deviceid,
// firstSeen, lastSeen and sessions (arrays of {timestamp, data} events).
// Malformed JSON reports the byte offset; unknown view names and broken
// invariants report the offending device. Sessions not ending in the stop
// state get a synthetic stop event appended.
std::vector<UserRecord> parse_log(std::string_view text, const Vocabulary& vocab);

std::string serialize_log(const std::vector<UserRecord>& records, const Vocabulary& vocab);

std::vector<UserRecord> load_log(const std::string& path, const Vocabulary& vocab);
void save_log(const std::string& path, const std::vector<UserRecord>& records,
              const Vocabulary& vocab);

// Keeps each session whose first event falls in the cut window (day of the
// first event, floored, relative to the user's first_seen), concatenates a
// user's kept sessions in time order and prepends cut_start when the
// concatenation does not already begin with it. Users with nothing in the
// window are dropped. cut_start defaults to the vocabulary start state.
TraceSet apply_time_cut(const std::vector<UserRecord>& records, const TimeCut& cut,
                        const Vocabulary& vocab, std::optional<int> cut_start = std::nullopt);

} // namespace tracelens
