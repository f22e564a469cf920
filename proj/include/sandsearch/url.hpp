#pragma once

#include <string>
#include <string_view>

#include "sandsearch/util.hpp"

namespace sandsearch {

// Canonical form used for all URL keying: lowercase scheme and host, fragment
// stripped, trailing slashes collapsed. Applied identically at ingest and lookup
// so report-cited URL variants still hit archived snapshots.
inline std::string canonicalize_url(std::string_view raw) {
    std::string_view url = trim(raw);

    if (auto frag = url.find('#'); frag != std::string_view::npos) {
        url = url.substr(0, frag);
    }

    std::string scheme;
    std::string_view rest = url;
    if (auto sep = url.find("://"); sep != std::string_view::npos) {
        scheme = to_lower(url.substr(0, sep)) + "://";
        rest = url.substr(sep + 3);
    }

    auto slash = rest.find('/');
    std::string host = to_lower(rest.substr(0, std::min(slash, rest.size())));
    std::string_view tail = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash);

    std::string_view path = tail;
    std::string_view query;
    if (auto q = tail.find('?'); q != std::string_view::npos) {
        path = tail.substr(0, q);
        query = tail.substr(q);  // includes '?'
    }
    while (!path.empty() && path.back() == '/') path.remove_suffix(1);

    std::string out = scheme + host;
    out.append(path);
    out.append(query);
    return out;
}

}  // namespace sandsearch
