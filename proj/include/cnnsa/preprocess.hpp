#pragma once

#include <string>
#include <vector>

namespace cnnsa::preprocess {

// Placeholder tokens substituted for tweet-specific patterns.
inline constexpr const char* kUserPlaceholder = "<کاربر>";
inline constexpr const char* kUrlPlaceholder = "<آدرس>";
inline constexpr const char* kNumberPlaceholder = "<عدد>";
inline constexpr const char* kHashtagPlaceholder = "<هشتگ>";

/// Longest-match left-to-right replacement of @-mentions, http(s) URLs,
/// digit runs (ASCII or Persian, with /-separated date parts), and
/// #-hashtags by their placeholder tokens. Placeholders are emitted as
/// standalone tokens: a space is inserted where the replaced span touched
/// non-space text. Total function; idempotent on its own output.
std::string substitute_patterns(const std::string& text);

/// Maps Arabic presentation forms to Persian equivalents, drops tatweel and
/// combining diacritics, removes every character outside {Persian letters,
/// digits, whitespace, standalone placeholder tokens}, keeps zero-width
/// non-joiners only between Persian letters, collapses whitespace runs and
/// trims. Character removal never introduces a token boundary.
std::string normalize(const std::string& text);

/// Whitespace split; placeholder tokens survive intact.
std::vector<std::string> tokenize(const std::string& text);

/// substitute_patterns -> normalize -> tokenize. Pattern substitution must
/// run first: normalization would otherwise strip the Latin characters the
/// URL and mention rules match on.
std::vector<std::string> pipeline(const std::string& text);

namespace detail {
std::vector<char32_t> decode_utf8(const std::string& bytes);
std::string encode_utf8(const std::vector<char32_t>& cps);
bool is_whitespace(char32_t c);
bool is_persian_letter(char32_t c);
}  // namespace detail

}  // namespace cnnsa::preprocess
