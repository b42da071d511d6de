#include "nudge/text.h"

#include <algorithm>
#include <array>

namespace nudge {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_alnum(char32_t c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool is_domain_char(char c) {
  return is_ascii_alnum(static_cast<unsigned char>(c)) || c == '-';
}

}  // namespace

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

char32_t next_code_point(std::string_view text, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(text[pos]);
  int extra = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    ++pos;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return U'�';
  }
  if (pos + extra >= text.size()) {
    ++pos;
    return U'�';
  }
  for (int i = 1; i <= extra; ++i) {
    const auto b = static_cast<unsigned char>(text[pos + i]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return U'�';
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += extra + 1;
  return cp;
}

bool is_word_code_point(char32_t cp) {
  if (cp < 0x80) return is_ascii_alnum(cp);
  return cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7;
}

std::vector<Token> word_tokens(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  while (pos < text.size()) {
    const std::size_t here = pos;
    const bool word = is_word_code_point(next_code_point(text, pos));
    if (word && start == std::string_view::npos) start = here;
    if (!word && start != std::string_view::npos) {
      tokens.push_back({start, text.substr(start, here - start)});
      start = std::string_view::npos;
    }
  }
  if (start != std::string_view::npos) tokens.push_back({start, text.substr(start)});
  return tokens;
}

bool looks_like_url(std::string_view token) {
  while (!token.empty() && std::string_view(".,!?;:'\")").find(token.back()) !=
                               std::string_view::npos) {
    token.remove_suffix(1);
  }
  while (!token.empty() && (token.front() == '(' || token.front() == '"' ||
                            token.front() == '\'')) {
    token.remove_prefix(1);
  }
  if (token.empty()) return false;
  const std::string lower = to_lower_ascii(token);
  for (std::string_view scheme : {"http://", "https://", "ftp://", "www."}) {
    if (lower.starts_with(scheme)) return true;
  }
  // Bare domain: label(.label)*.tld with an alphabetic TLD of >= 2 letters,
  // optionally followed by a path.
  const std::string_view host = std::string_view(lower).substr(0, lower.find('/'));
  if (host.empty() || host.find('@') != std::string_view::npos) return false;
  std::size_t labels = 0;
  std::string_view rest = host;
  std::string_view last;
  while (true) {
    const auto dot = rest.find('.');
    const auto label = rest.substr(0, dot);
    if (label.empty() || !std::all_of(label.begin(), label.end(), is_domain_char)) {
      return false;
    }
    ++labels;
    last = label;
    if (dot == std::string_view::npos) break;
    rest.remove_prefix(dot + 1);
  }
  return labels >= 2 && last.size() >= 2 && std::all_of(last.begin(), last.end(), is_ascii_alpha);
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) parts.push_back(text.substr(start, i - start));
  }
  return parts;
}

std::string strip_urls_and_emoji(std::string_view text) {
  std::string out;
  for (auto part : split_whitespace(text)) {
    if (looks_like_url(part)) continue;
    std::string kept;
    std::size_t pos = 0;
    while (pos < part.size()) {
      const std::size_t start = pos;
      const char32_t cp = next_code_point(part, pos);
      if (cp < 0x80 || is_word_code_point(cp)) kept.append(part.substr(start, pos - start));
    }
    if (kept.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += kept;
  }
  return out;
}

std::size_t code_point_length(std::string_view text) {
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    next_code_point(text, pos);
    ++n;
  }
  return n;
}

}  // namespace nudge
