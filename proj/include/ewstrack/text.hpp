#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ews {

/// Lowercases and splits on every run of non-alphanumeric code points.
/// No stemming, no stopwords. Lowercasing covers ASCII, Latin-1, Latin
/// Extended-A, Greek and Cyrillic; other letters pass through unchanged.
/// Any non-ASCII code point outside the punctuation/symbol blocks counts as
/// alphanumeric. Invalid UTF-8 bytes act as separators.
std::vector<std::string> tokenize(std::string_view text);

/// 64-bit FNV-1a. The seed's eight little-endian bytes are hashed before the
/// data, so seed 0 differs from the unseeded hash only by those zero bytes.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed);
std::uint64_t fnv1a64(std::string_view data);

std::string to_hex(std::uint64_t value);

/// Lowercase, punctuation stripped, whitespace collapsed to single spaces.
std::string normalize_for_match(std::string_view text);

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

}  // namespace ews
