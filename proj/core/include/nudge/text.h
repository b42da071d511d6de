#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace nudge {

std::string_view trim(std::string_view text);
std::string to_lower_ascii(std::string_view text);

// Decodes one UTF-8 code point starting at text[pos] and advances pos.
// Malformed bytes decode to U+FFFD and consume a single byte.
char32_t next_code_point(std::string_view text, std::size_t& pos);

// Word characters: ASCII letters and digits plus the Latin-1 Supplement and
// Latin Extended-A/B letters (U+00C0..U+024F, excluding the multiplication
// and division signs). Everything else, emoji included, separates tokens.
bool is_word_code_point(char32_t cp);

struct Token {
  std::size_t offset;     // byte offset of the token in the source text
  std::string_view text;  // view into the source text, original case
};

// Maximal runs of word code points.
std::vector<Token> word_tokens(std::string_view text);

// True for whitespace-delimited tokens that are links: scheme-prefixed
// (http://, https://, ftp://, www.) or bare domains such as "t.co/x" or
// "example.com". Trailing sentence punctuation is ignored.
bool looks_like_url(std::string_view token);

// Splits on ASCII whitespace.
std::vector<std::string_view> split_whitespace(std::string_view text);

// Removes URL tokens and every non-word, non-ASCII-punctuation code point
// (emoji, pictographs, symbols), then collapses whitespace. This is the
// normalization applied before political classification.
std::string strip_urls_and_emoji(std::string_view text);

// Number of UTF-8 code points.
std::size_t code_point_length(std::string_view text);

}  // namespace nudge
