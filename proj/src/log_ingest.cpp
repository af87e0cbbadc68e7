#include "tracelens/log_ingest.hpp"

#include "tracelens/errors.hpp"
#include "tracelens/text_format.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace tracelens {

using nlohmann::ordered_json;

TimeCut parse_time_cut(std::string_view text) {
    size_t colon = text.find(':');
    if (colon == std::string_view::npos)
        throw InputError("bad time cut '" + std::string(text) + "', expected 'd1:d2'");
    long d1 = static_cast<long>(parse_int(text.substr(0, colon), "cut start day"));
    long d2 = static_cast<long>(parse_int(text.substr(colon + 1), "cut end day"));
    if (d1 < 0 || d2 <= d1)
        throw InputError("bad time cut '" + std::string(text) + "': need 0 <= d1 < d2");
    return TimeCut{d1, d2};
}

std::vector<TimeCut> parse_time_cuts(std::string_view text) {
    std::vector<TimeCut> cuts;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        cuts.push_back(parse_time_cut(text.substr(pos, comma - pos)));
        pos = comma + 1;
        if (comma == text.size()) break;
    }
    if (cuts.empty())
        throw InputError("no time cuts given");
    return cuts;
}

std::string cut_tag(const TimeCut& cut) {
    return "cut" + std::to_string(cut.d1) + "to" + std::to_string(cut.d2);
}

namespace {

const ordered_json& field(const ordered_json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw InputError(where + ": missing field '" + key + "'");
    return *it;
}

std::string str_field(const ordered_json& obj, const char* key, const std::string& where) {
    const auto& v = field(obj, key, where);
    if (!v.is_string())
        throw InputError(where + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

} // namespace

std::vector<UserRecord> parse_log(std::string_view text, const Vocabulary& vocab) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("log parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!root.is_array())
        throw InputError("log must be a JSON array of user objects");

    std::vector<UserRecord> records;
    records.reserve(root.size());
    for (size_t u = 0; u < root.size(); ++u) {
        const auto& node = root[u];
        std::string where = "user #" + std::to_string(u);
        if (!node.is_object())
            throw InputError(where + ": expected an object");
        UserRecord rec;
        rec.device_id = str_field(node, "deviceid", where);
        where = "device " + rec.device_id;
        rec.first_seen = parse_timestamp(str_field(node, "firstSeen", where));
        rec.last_seen = parse_timestamp(str_field(node, "lastSeen", where));
        if (rec.first_seen > rec.last_seen)
            throw InputError(where + ": firstSeen is after lastSeen");
        const auto& sessions = field(node, "sessions", where);
        if (!sessions.is_array())
            throw InputError(where + ": 'sessions' must be an array");
        for (size_t s = 0; s < sessions.size(); ++s) {
            const auto& snode = sessions[s];
            std::string swhere = where + " session #" + std::to_string(s);
            if (!snode.is_array() || snode.empty())
                throw InputError(swhere + ": sessions must be non-empty arrays of events");
            Session session;
            session.events.reserve(snode.size() + 1);
            for (const auto& enode : snode) {
                if (!enode.is_object())
                    throw InputError(swhere + ": expected event objects");
                LogEvent ev;
                ev.timestamp = parse_timestamp(str_field(enode, "timestamp", swhere));
                std::string view = str_field(enode, "data", swhere);
                auto id = vocab.find(view);
                if (!id)
                    throw InputError(swhere + ": unknown view name '" + view + "'");
                ev.state = *id;
                if (!session.events.empty() && ev.timestamp < session.events.back().timestamp)
                    throw InputError(swhere + ": timestamps must be non-decreasing");
                session.events.push_back(ev);
            }
            if (session.events.back().state != vocab.stop_state())
                session.events.push_back({session.events.back().timestamp, vocab.stop_state()});
            rec.sessions.push_back(std::move(session));
        }
        std::stable_sort(rec.sessions.begin(), rec.sessions.end(),
                         [](const Session& a, const Session& b) {
                             return a.events.front().timestamp < b.events.front().timestamp;
                         });
        records.push_back(std::move(rec));
    }
    return records;
}

std::string serialize_log(const std::vector<UserRecord>& records, const Vocabulary& vocab) {
    ordered_json root = ordered_json::array();
    for (const UserRecord& rec : records) {
        ordered_json sessions = ordered_json::array();
        size_t total = 0;
        for (const Session& session : rec.sessions) {
            ordered_json events = ordered_json::array();
            for (const LogEvent& ev : session.events) {
                events.push_back({{"timestamp", format_timestamp(ev.timestamp)},
                                  {"data", vocab.name(ev.state)}});
            }
            total += session.events.size();
            sessions.push_back(std::move(events));
        }
        root.push_back({{"deviceid", rec.device_id},
                        {"totalevents", total},
                        {"firstSeen", format_timestamp(rec.first_seen)},
                        {"lastSeen", format_timestamp(rec.last_seen)},
                        {"sessions", std::move(sessions)}});
    }
    return root.dump(2) + "\n";
}

std::vector<UserRecord> load_log(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open log file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_log(ss.str(), vocab);
}

void save_log(const std::string& path, const std::vector<UserRecord>& records,
              const Vocabulary& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write log file: " + path);
    out << serialize_log(records, vocab);
    if (!out) throw InputError("write failed: " + path);
}

TraceSet apply_time_cut(const std::vector<UserRecord>& records, const TimeCut& cut,
                        const Vocabulary& vocab, std::optional<int> cut_start) {
    int start = cut_start.value_or(vocab.start_state());
    if (start < 0 || start >= vocab.size())
        throw InputError("cut start symbol out of range");
    TraceSet set{vocab, start, {}};
    for (const UserRecord& rec : records) {
        Trace tr;
        tr.device_id = rec.device_id;
        for (const Session& session : rec.sessions) {
            std::int64_t offset = session.events.front().timestamp - rec.first_seen;
            long day = static_cast<long>(offset >= 0 ? offset / 86400
                                                     : (offset - 86399) / 86400);
            if (day < cut.d1 || day >= cut.d2) continue;
            for (const LogEvent& ev : session.events) tr.states.push_back(ev.state);
        }
        if (tr.states.empty()) continue;
        if (tr.states.front() != start)
            tr.states.insert(tr.states.begin(), start);
        set.traces.push_back(std::move(tr));
    }
    return set;
}

} // namespace tracelens
