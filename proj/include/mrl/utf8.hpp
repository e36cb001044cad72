#pragma once

#include <string>
#include <string_view>

namespace mrl::utf8 {

/// Decodes UTF-8; malformed bytes decode to U+FFFD.
std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);
void append(std::string& out, char32_t c);
/// Number of scalar values in `s`.
std::size_t length(std::string_view s);

}  // namespace mrl::utf8
