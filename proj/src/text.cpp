#include "kgf/text.hpp"

#include <algorithm>
#include <array>

namespace kgf {

std::uint32_t utf8_decode(std::string_view s, std::size_t& i) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    auto cont = [&](std::size_t k) {
        return i + k < s.size() &&
               (static_cast<unsigned char>(s[i + k]) & 0xc0) == 0x80;
    };
    if ((b0 & 0xe0) == 0xc0 && cont(1)) {
        std::uint32_t cp = (b0 & 0x1fu) << 6 |
                           (static_cast<unsigned char>(s[i + 1]) & 0x3fu);
        i += 2;
        return cp;
    }
    if ((b0 & 0xf0) == 0xe0 && cont(1) && cont(2)) {
        std::uint32_t cp = (b0 & 0x0fu) << 12 |
                           (static_cast<unsigned char>(s[i + 1]) & 0x3fu) << 6 |
                           (static_cast<unsigned char>(s[i + 2]) & 0x3fu);
        i += 3;
        return cp;
    }
    if ((b0 & 0xf8) == 0xf0 && cont(1) && cont(2) && cont(3)) {
        std::uint32_t cp = (b0 & 0x07u) << 18 |
                           (static_cast<unsigned char>(s[i + 1]) & 0x3fu) << 12 |
                           (static_cast<unsigned char>(s[i + 2]) & 0x3fu) << 6 |
                           (static_cast<unsigned char>(s[i + 3]) & 0x3fu);
        i += 4;
        return cp;
    }
    ++i;  // invalid byte: treat as one code point
    return b0;
}

void utf8_encode(std::uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

std::size_t utf8_length(std::string_view s) {
    std::size_t i = 0, n = 0;
    while (i < s.size()) {
        utf8_decode(s, i);
        ++n;
    }
    return n;
}

std::pair<std::size_t, std::size_t> utf8_byte_range(std::string_view s,
                                                    std::size_t cp_start,
                                                    std::size_t cp_end) {
    std::size_t i = 0, cp = 0;
    std::size_t b0 = s.size(), b1 = s.size();
    while (i < s.size() && cp < cp_end) {
        if (cp == cp_start) b0 = i;
        utf8_decode(s, i);
        ++cp;
    }
    if (cp_start == cp) b0 = i;
    if (cp_end <= cp) b1 = i;
    return {b0, b1};
}

std::uint32_t fold_code_point(std::uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    // Latin-1 supplement, excluding the multiplication sign.
    if (cp >= 0xc0 && cp <= 0xde && cp != 0xd7) return cp + 0x20;
    // Latin Extended-A: mostly alternating upper/lower pairs.
    if (cp >= 0x100 && cp <= 0x137) return cp | 1u;
    if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x14a && cp <= 0x177) return cp | 1u;
    if (cp == 0x178) return 0xff;
    if (cp >= 0x179 && cp <= 0x17e) return (cp % 2 == 1) ? cp + 1 : cp;
    // Greek capitals (skipping the gap at 0x3a2).
    if (cp >= 0x391 && cp <= 0x3a9 && cp != 0x3a2) return cp + 0x20;
    // Cyrillic.
    if (cp >= 0x410 && cp <= 0x42f) return cp + 0x20;
    if (cp >= 0x400 && cp <= 0x40f) return cp + 0x50;
    return cp;
}

static bool is_space_cp(std::uint32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' ||
           cp == '\f' || cp == '\v' || cp == 0xa0 || cp == 0x2028 ||
           cp == 0x2029 || (cp >= 0x2000 && cp <= 0x200a) || cp == 0x3000;
}

std::string fold_key(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    bool pending_space = false, seen_any = false;
    while (i < s.size()) {
        std::uint32_t cp = utf8_decode(s, i);
        if (is_space_cp(cp)) {
            pending_space = seen_any;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        utf8_encode(fold_code_point(cp), out);
        seen_any = true;
    }
    return out;
}

std::string fold_text(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) utf8_encode(fold_code_point(utf8_decode(s, i)), out);
    return out;
}

bool is_word_code_point(std::uint32_t cp) {
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
               (cp >= 'A' && cp <= 'Z') || cp == '_';
    }
    return !is_space_cp(cp) && !(cp >= 0x2010 && cp <= 0x2027);
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0, cp_index = 0;
    while (i < text.size()) {
        std::size_t byte_start = i;
        std::size_t cp_start = cp_index;
        std::uint32_t cp = utf8_decode(text, i);
        ++cp_index;
        if (!is_word_code_point(cp)) continue;

        Token tok;
        tok.byte_start = byte_start;
        tok.cp_start = cp_start;
        utf8_encode(fold_code_point(cp), tok.folded);
        while (i < text.size()) {
            std::size_t j = i;
            std::uint32_t next = utf8_decode(text, j);
            if (!is_word_code_point(next)) break;
            utf8_encode(fold_code_point(next), tok.folded);
            i = j;
            ++cp_index;
        }
        tok.byte_end = i;
        tok.cp_end = cp_index;
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

static std::vector<std::uint32_t> code_points(std::string_view s) {
    std::vector<std::uint32_t> cps;
    std::size_t i = 0;
    while (i < s.size()) cps.push_back(utf8_decode(s, i));
    return cps;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
    auto sa = code_points(a);
    auto sb = code_points(b);
    std::size_t m = sa.size(), n = sb.size();
    std::vector<std::size_t> prev(n + 1), curr(n + 1);
    for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
    for (std::size_t i = 0; i < m; ++i) {
        curr[0] = i + 1;
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t del = prev[j + 1] + 1;
            std::size_t ins = curr[j] + 1;
            std::size_t sub = prev[j] + (sa[i] == sb[j] ? 0 : 1);
            curr[j + 1] = std::min({del, ins, sub});
        }
        prev.swap(curr);
    }
    return prev[n];
}

double lexical_similarity(std::string_view a, std::string_view b) {
    std::string fa = fold_key(a), fb = fold_key(b);
    std::size_t la = utf8_length(fa), lb = utf8_length(fb);
    std::size_t longest = std::max(la, lb);
    if (longest == 0) return 1.0;
    std::size_t d = edit_distance(fa, fb);
    return 1.0 - static_cast<double>(d) / static_cast<double>(longest);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string to_hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

bool from_hex64(std::string_view s, std::uint64_t& out) {
    if (s.size() != 16) return false;
    std::uint64_t v = 0;
    for (char c : s) {
        v <<= 4;
        if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint64_t>(c - 'A' + 10);
        else return false;
    }
    out = v;
    return true;
}

}  // namespace kgf
