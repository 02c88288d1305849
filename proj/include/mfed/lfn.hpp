#ifndef MFED_LFN_HPP
#define MFED_LFN_HPP

#include <string_view>

#include "mfed/errors.hpp"

namespace mfed {

// Logical file name: nonempty, begins with '/', slash-separated components of
// [A-Za-z0-9._-]+, no trailing slash.
inline bool is_valid_lfn_component_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '.' || c == '_' || c == '-';
}

inline bool is_valid_lfn(std::string_view lfn) {
    if (lfn.size() < 2 || lfn.size() > 512 || lfn.front() != '/') return false;
    std::size_t comp_len = 0;
    for (std::size_t i = 1; i < lfn.size(); ++i) {
        char c = lfn[i];
        if (c == '/') {
            if (comp_len == 0) return false;
            comp_len = 0;
        } else if (is_valid_lfn_component_char(c)) {
            ++comp_len;
        } else {
            return false;
        }
    }
    return comp_len > 0;
}

inline void check_lfn(std::string_view lfn) {
    if (!is_valid_lfn(lfn)) throw err_malformed("invalid logical file name: " + std::string(lfn));
}

// List prefixes additionally admit "/" and a trailing slash.
inline bool is_valid_lfn_prefix(std::string_view prefix) {
    if (prefix == "/") return true;
    if (prefix.empty() || prefix.front() != '/') return false;
    std::string_view body = prefix;
    if (body.back() == '/') body.remove_suffix(1);
    return is_valid_lfn(body);
}

}  // namespace mfed

#endif
