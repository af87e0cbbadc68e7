#pragma once

#include "tracelens/vocabulary.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace tracelens {

// One user's view sequence inside a time cut: state ids over the shared
// vocabulary, length >= 2.
struct Trace {
    std::string device_id;
    std::vector<int> states;
};

struct TraceSet {
    Vocabulary vocabulary;
    int cut_start; // symbol prepended when a trace does not open with it
    std::vector<Trace> traces;
};

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// n x n transition occurrence counts for one trace: entry (i, j) is the
// number of adjacent pairs (i -> j). Throws if the trace has fewer than two
// states or an id out of range.
CountMatrix count_matrix(const std::vector<int>& trace, const Vocabulary& vocab);

// Text bundle: embedded vocabulary plus one "trace <device> <ids...>" line
// per user, so a trace file is interpretable on its own.
std::string serialize_traces(const TraceSet& set);
TraceSet parse_traces(std::string_view text, std::string_view origin = "traces");

void save_traces(const std::string& path, const TraceSet& set);
TraceSet load_traces(const std::string& path);

} // namespace tracelens
