#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bdspell::unicode {

inline constexpr char32_t kVirama = 0x09CD;

bool is_valid_utf8(std::string_view text);

// Throws InputError on malformed UTF-8.
std::vector<char32_t> decode(std::string_view text);
std::string encode(char32_t cp);
std::string encode(const std::vector<char32_t>& cps);

// Canonical composition (NFC).
std::string nfc(std::string_view text);
bool is_nfc(std::string_view text);

// "U+0995 'ক'"
std::string describe(char32_t cp);

}  // namespace bdspell::unicode
