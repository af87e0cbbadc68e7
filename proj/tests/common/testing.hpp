#pragma once

#include <string>
#include <utility>

namespace testutil {

// Runs fn, returns the caught E's message; empty string when fn does not
// throw E. Lets tests assert on message fragments.
template <class E, class F>
inline std::string error_message(F&& fn) {
    try {
        std::forward<F>(fn)();
    } catch (const E& e) {
        return e.what();
    }
    return {};
}

inline std::string data_dir() {
#ifdef TRACELENS_DATA_DIR
    return TRACELENS_DATA_DIR;
#else
    return "data";
#endif
}

inline bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

} // namespace testutil
