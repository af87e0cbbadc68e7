#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tracelens {

// Locale-independent numeric and timestamp formatting. All file output goes
// through these so that reruns are byte-identical across machines.

// Shortest decimal form that round-trips the exact double. Infinity prints
// as "inf"/"-inf", used for unreachable-state expected rewards.
std::string format_double(double v);

// Fixed 17 significant digits, enough to round-trip any double. Used in
// model files and exported transition probabilities.
std::string format_double17(double v);

// Strict parse; accepts what the two formatters emit, plus plain int/float
// literals. Throws InputError on trailing garbage.
double parse_double(std::string_view text, std::string_view what = "number");

std::int64_t parse_int(std::string_view text, std::string_view what = "integer");

// "YYYY-MM-DD HH:MM:SS" interpreted as UTC. Round-trip strictness: the
// parsed value must format back to the input, so 2013-02-30 is rejected.
std::int64_t parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t seconds_since_epoch);

} // namespace tracelens
