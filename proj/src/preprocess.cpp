#include "cnnsa/preprocess.hpp"

#include <array>

namespace cnnsa::preprocess {

namespace detail {

std::vector<char32_t> decode_utf8(const std::string& bytes) {
    std::vector<char32_t> out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    while (i < bytes.size()) {
        unsigned char b = bytes[i];
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (b < 0x80) {
            cp = b;
        } else if ((b & 0xE0) == 0xC0) {
            len = 2;
            cp = b & 0x1F;
        } else if ((b & 0xF0) == 0xE0) {
            len = 3;
            cp = b & 0x0F;
        } else if ((b & 0xF8) == 0xF0) {
            len = 4;
            cp = b & 0x07;
        } else {
            ++i;
            out.push_back(0xFFFD);
            continue;
        }
        if (i + len > bytes.size()) {
            out.push_back(0xFFFD);
            break;
        }
        bool ok = true;
        for (std::size_t j = 1; j < len; ++j) {
            unsigned char cont = bytes[i + j];
            if ((cont & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cont & 0x3F);
        }
        if (!ok || cp > 0x10FFFF) {
            out.push_back(0xFFFD);
            ++i;
        } else {
            out.push_back(cp);
            i += len;
        }
    }
    return out;
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size() * 2);
    for (char32_t cp : cps) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }
    return out;
}

bool is_whitespace(char32_t c) {
    switch (c) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
        case 0x00A0: case 0x1680: case 0x200B: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

bool is_persian_letter(char32_t c) {
    if (c >= 0x0621 && c <= 0x063A) return true;  // hamza .. ghain
    if (c >= 0x0641 && c <= 0x0648) return true;  // feh .. waw
    switch (c) {
        case 0x067E: case 0x0686: case 0x0698:  // pe, che, zhe
        case 0x06A9: case 0x06AF:               // keheh, gaf
        case 0x06C0: case 0x06CC:               // heh with yeh, farsi yeh
            return true;
        default:
            return false;
    }
}

}  // namespace detail

namespace {

using detail::is_persian_letter;
using detail::is_whitespace;

constexpr char32_t kZwnj = 0x200C;

bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
bool is_persian_digit(char32_t c) { return c >= 0x06F0 && c <= 0x06F9; }
bool is_arabic_indic_digit(char32_t c) { return c >= 0x0660 && c <= 0x0669; }
bool is_digit(char32_t c) {
    return is_ascii_digit(c) || is_persian_digit(c) || is_arabic_indic_digit(c);
}
bool is_mention_char(char32_t c) {
    return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') ||
           is_ascii_digit(c) || c == U'_';
}

/// Arabic presentation forms folded to their Persian equivalents.
char32_t map_char(char32_t c) {
    switch (c) {
        case 0x064A: case 0x0649: return 0x06CC;  // ي, ى -> ی
        case 0x0643: return 0x06A9;               // ك -> ک
        case 0x0623: case 0x0625: case 0x0671: return 0x0627;  // أ, إ, ٱ -> ا
        case 0x0629: return 0x0647;               // ة -> ه
        default:
            if (is_arabic_indic_digit(c)) return c - 0x0660 + 0x06F0;
            return c;
    }
}

const std::array<std::vector<char32_t>, 4>& placeholder_cps() {
    static const std::array<std::vector<char32_t>, 4> table = {
        detail::decode_utf8(kUserPlaceholder),
        detail::decode_utf8(kUrlPlaceholder),
        detail::decode_utf8(kNumberPlaceholder),
        detail::decode_utf8(kHashtagPlaceholder),
    };
    return table;
}

bool matches_at(const std::vector<char32_t>& text, std::size_t pos,
                const char* literal) {
    for (std::size_t i = 0; literal[i] != '\0'; ++i) {
        if (pos + i >= text.size() ||
            text[pos + i] != static_cast<char32_t>(literal[i]))
            return false;
    }
    return true;
}

void append_placeholder(std::vector<char32_t>& out,
                        const std::vector<char32_t>& placeholder,
                        const std::vector<char32_t>& text, std::size_t next) {
    if (!out.empty() && !is_whitespace(out.back())) out.push_back(U' ');
    out.insert(out.end(), placeholder.begin(), placeholder.end());
    if (next < text.size() && !is_whitespace(text[next])) out.push_back(U' ');
}

std::size_t match_digit_run(const std::vector<char32_t>& t, std::size_t i) {
    std::size_t j = i;
    while (j < t.size() && is_digit(t[j])) ++j;
    if (j == i) return i;
    // Date parts: a slash joins two digit runs into one number token.
    while (j + 1 < t.size() && t[j] == U'/' && is_digit(t[j + 1])) {
        ++j;
        while (j < t.size() && is_digit(t[j])) ++j;
    }
    return j;
}

}  // namespace

std::string substitute_patterns(const std::string& text) {
    const auto t = detail::decode_utf8(text);
    const auto& ph = placeholder_cps();
    std::vector<char32_t> out;
    out.reserve(t.size());
    std::size_t i = 0;
    while (i < t.size()) {
        char32_t c = t[i];
        if (c == U'@') {
            std::size_t j = i + 1;
            while (j < t.size() && is_mention_char(t[j])) ++j;
            if (j > i + 1) {
                append_placeholder(out, ph[0], t, j);
                i = j;
                continue;
            }
        } else if (c == U'h' &&
                   (matches_at(t, i, "http://") || matches_at(t, i, "https://"))) {
            std::size_t j = i + (matches_at(t, i, "https://") ? 8 : 7);
            while (j < t.size() && !is_whitespace(t[j])) ++j;
            append_placeholder(out, ph[1], t, j);
            i = j;
            continue;
        } else if (is_digit(c)) {
            std::size_t j = match_digit_run(t, i);
            append_placeholder(out, ph[2], t, j);
            i = j;
            continue;
        } else if (c == U'#') {
            std::size_t j = i + 1;
            while (j < t.size() && !is_whitespace(t[j])) ++j;
            if (j > i + 1) {
                append_placeholder(out, ph[3], t, j);
                i = j;
                continue;
            }
        }
        out.push_back(c);
        ++i;
    }
    return detail::encode_utf8(out);
}

namespace {

/// Character filter for one whitespace-delimited unit. Removal never adds a
/// boundary, so a unit yields at most one token.
std::vector<char32_t> filter_word(const std::vector<char32_t>& word) {
    std::vector<char32_t> kept;
    kept.reserve(word.size());
    for (char32_t raw : word) {
        char32_t c = map_char(raw);
        if (is_persian_letter(c) || is_ascii_digit(c) || is_persian_digit(c) ||
            c == kZwnj)
            kept.push_back(c);
    }
    // ZWNJ survives only between two Persian letters («می‌رود» stays one
    // token); runs collapse, dangling ones vanish.
    std::vector<char32_t> result;
    result.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (kept[i] == kZwnj) {
            if (result.empty() || !is_persian_letter(result.back())) continue;
            std::size_t next = i + 1;
            while (next < kept.size() && kept[next] == kZwnj) ++next;
            if (next >= kept.size() || !is_persian_letter(kept[next])) continue;
        }
        result.push_back(kept[i]);
    }
    return result;
}

}  // namespace

std::string normalize(const std::string& text) {
    const auto t = detail::decode_utf8(text);
    const auto& ph = placeholder_cps();
    std::vector<char32_t> out;
    out.reserve(t.size());

    std::size_t i = 0;
    while (i < t.size()) {
        if (is_whitespace(t[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < t.size() && !is_whitespace(t[j])) ++j;
        std::vector<char32_t> word(t.begin() + i, t.begin() + j);

        bool placeholder = false;
        for (const auto& p : ph) {
            if (word == p) {
                placeholder = true;
                break;
            }
        }
        std::vector<char32_t> token = placeholder ? word : filter_word(word);
        if (!token.empty()) {
            if (!out.empty()) out.push_back(U' ');
            out.insert(out.end(), token.begin(), token.end());
        }
        i = j;
    }
    return detail::encode_utf8(out);
}

std::vector<std::string> tokenize(const std::string& text) {
    const auto t = detail::decode_utf8(text);
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < t.size()) {
        if (is_whitespace(t[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < t.size() && !is_whitespace(t[j])) ++j;
        tokens.push_back(
            detail::encode_utf8(std::vector<char32_t>(t.begin() + i, t.begin() + j)));
        i = j;
    }
    return tokens;
}

std::vector<std::string> pipeline(const std::string& text) {
    return tokenize(normalize(substitute_patterns(text)));
}

}  // namespace cnnsa::preprocess
