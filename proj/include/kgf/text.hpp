#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kgf {

// UTF-8 and case-folding helpers shared by the store's name lookup and the
// annotator. Folding is simple per-code-point lowercasing over ASCII,
// Latin-1, Latin Extended-A, Greek and Cyrillic; no transliteration, no
// locale dependence, so folded forms are stable across platforms.

// Decodes the code point starting at byte i; advances i past it.
// Invalid sequences decode each bad byte as one code point (value of
// the byte) so spans stay well defined on dirty input.
std::uint32_t utf8_decode(std::string_view s, std::size_t& i);

void utf8_encode(std::uint32_t cp, std::string& out);

std::size_t utf8_length(std::string_view s);  // in code points

// Byte range covering code points [cp_start, cp_end).
std::pair<std::size_t, std::size_t> utf8_byte_range(std::string_view s,
                                                    std::size_t cp_start,
                                                    std::size_t cp_end);

std::uint32_t fold_code_point(std::uint32_t cp);

// Lowercases and collapses runs of whitespace to single spaces, trimming the
// ends. The canonical form for alias-table keys and name lookups.
std::string fold_key(std::string_view s);

// Lowercase only, byte length may change.
std::string fold_text(std::string_view s);

bool is_word_code_point(std::uint32_t cp);

struct Token {
    std::size_t cp_start, cp_end;      // code point offsets in the document
    std::size_t byte_start, byte_end;  // byte offsets for slicing
    std::string folded;                // folded form of the token
};

// Word tokens: maximal runs of letters/digits (code points >= 0x80 count as
// letters). Match boundaries for mention detection.
std::vector<Token> tokenize(std::string_view text);

// Levenshtein distance over code points of the folded inputs.
std::size_t edit_distance(std::string_view a, std::string_view b);

// 1 - dist/max(len); both empty -> 1.
double lexical_similarity(std::string_view a, std::string_view b);

// FNV-1a 64-bit over raw bytes. Stable content hash for incremental
// annotation; collisions are accepted as re-annotation misses.
std::uint64_t fnv1a64(std::string_view bytes);

std::string to_hex64(std::uint64_t v);
bool from_hex64(std::string_view s, std::uint64_t& out);

}  // namespace kgf
