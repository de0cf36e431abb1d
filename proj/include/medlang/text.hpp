#ifndef MEDLANG_TEXT_HPP
#define MEDLANG_TEXT_HPP

#include <string>
#include <string_view>
#include <vector>

namespace medlang::text {

/// Strips leading and trailing Unicode whitespace from UTF-8 text.
std::string_view trim(std::string_view text);
std::string_view trim_right(std::string_view text);

std::string to_lower_ascii(std::string_view text);

/// Splits on Unicode whitespace, strips leading/trailing punctuation from each
/// token (a token made only of '-' is kept verbatim), folds typographic
/// apostrophes to ASCII and lowercases. Empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Collapses internal whitespace runs and lowercases; used for lexicon phrases.
std::string normalize_phrase(std::string_view phrase);

inline bool is_dash_token(std::string_view token) {
  return !token.empty() && token.find_first_not_of('-') == std::string_view::npos;
}

/// True when the right-trimmed text ends with the transcription cut-off
/// marker "- -" (or "--" unless strict).
bool ends_with_interruption_marker(std::string_view text, bool strict = false);

}  // namespace medlang::text

#endif  // MEDLANG_TEXT_HPP
