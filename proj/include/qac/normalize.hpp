#pragma once

#include <string>
#include <string_view>

namespace qac {

// Canonical form used for every query and prefix: Unicode NFC, lowercase,
// whitespace runs collapsed to one ASCII space, no leading/trailing space.
// Invalid UTF-8 sequences are replaced with U+FFFD.
std::string normalize(std::string_view text);

}  // namespace qac
