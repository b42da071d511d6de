#include "nudge/replygen.h"

#include <algorithm>

#include <fmt/core.h>

#include "nudge/csv.h"
#include "nudge/text.h"

namespace nudge {
namespace {

bool is_kept_punctuation(char32_t c) {
  switch (c) {
    case '.':
    case ',':
    case '!':
    case '?':
    case '\'':
    case '"':
    case '-':
      return true;
    default:
      return false;
  }
}

char32_t fold_quote(char32_t c) {
  switch (c) {
    case U'‘':
    case U'’':
      return '\'';
    case U'“':
    case U'”':
      return '"';
    default:
      return c;
  }
}

bool is_mention_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

void append_filtered(std::string_view part, std::string& out) {
  std::size_t pos = 0;
  while (pos < part.size()) {
    const std::size_t start = pos;
    const char32_t cp = fold_quote(next_code_point(part, pos));
    if (cp < 0x80 && is_kept_punctuation(cp)) {
      out.push_back(static_cast<char>(cp));
    } else if (is_word_code_point(cp)) {
      out.append(part.substr(start, pos - start));
    }
  }
}

std::unordered_set<std::string> load_token_set(const std::filesystem::path& path) {
  std::unordered_set<std::string> out;
  for (const auto& line : read_lines(path)) out.insert(to_lower_ascii(line));
  return out;
}

std::vector<std::string> trigrams(const std::string& s) {
  std::vector<std::string> grams;
  if (s.empty()) return grams;
  if (s.size() < 3) {
    grams.push_back(s);
    return grams;
  }
  grams.reserve(s.size() - 2);
  for (std::size_t i = 0; i + 3 <= s.size(); ++i) grams.push_back(s.substr(i, 3));
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

bool has_token_in(std::string_view text, const std::unordered_set<std::string>& words) {
  if (words.empty()) return false;
  for (const auto& token : word_tokens(text)) {
    if (words.contains(to_lower_ascii(token.text))) return true;
  }
  return false;
}

}  // namespace

std::string sanitize_input(std::string_view raw) {
  std::string out;
  for (auto part : split_whitespace(raw)) {
    if (looks_like_url(part)) continue;
    std::string kept;
    if (part.front() == '@') {
      std::size_t end = 1;
      while (end < part.size() && is_mention_char(part[end])) ++end;
      if (end > 1) {
        kept.append(part.substr(0, end));
        part.remove_prefix(end);
      }
    }
    append_filtered(part, kept);
    if (kept.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += kept;
  }
  if (out.empty()) throw EmptyInputError("input is empty after cleaning");
  return out;
}

std::string_view to_string(Gate gate) {
  switch (gate) {
    case Gate::kEcho:
      return "echo";
    case Gate::kGeneric:
      return "generic";
    case Gate::kProfanity:
      return "profanity";
    case Gate::kPlatformTerms:
      return "platform_terms";
  }
  return "unknown";
}

std::string_view to_string(Provenance provenance) {
  return provenance == Provenance::kGenerated ? "generated" : "template";
}

GateLexicons GateLexicons::load(const std::filesystem::path& profanity,
                                const std::filesystem::path& platform_terms,
                                const std::filesystem::path& generic_responses) {
  GateLexicons lex;
  lex.profanity = load_token_set(profanity);
  lex.platform_terms = load_token_set(platform_terms);
  for (const auto& line : read_lines(generic_responses)) {
    lex.generic_responses.push_back(normalize_for_generic(line));
  }
  return lex;
}

std::string normalize_for_echo(std::string_view text) {
  std::string out;
  for (const auto& token : word_tokens(text)) {
    if (!out.empty()) out.push_back(' ');
    out += to_lower_ascii(token.text);
  }
  return out;
}

std::string normalize_for_generic(std::string_view text) {
  std::string out;
  for (auto part : split_whitespace(text)) {
    if (!out.empty()) out.push_back(' ');
    out += to_lower_ascii(part);
  }
  return out;
}

double trigram_jaccard(std::string_view a, std::string_view b) {
  const auto ga = trigrams(normalize_for_echo(a));
  const auto gb = trigrams(normalize_for_echo(b));
  if (ga.empty() && gb.empty()) return 1.0;
  std::size_t shared = 0;
  auto ia = ga.begin();
  auto ib = gb.begin();
  while (ia != ga.end() && ib != gb.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++shared;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(ga.size() + gb.size() - shared);
}

GateVerdict apply_quality_gates(std::string_view draft, std::string_view input,
                                const GateLexicons& lexicons) {
  if (trim(draft).empty()) throw Error("apply_quality_gates: empty draft");
  if (trigram_jaccard(draft, input) >= lexicons.echo_threshold) return {Gate::kEcho};
  const auto generic = normalize_for_generic(draft);
  if (std::find(lexicons.generic_responses.begin(), lexicons.generic_responses.end(), generic) !=
      lexicons.generic_responses.end()) {
    return {Gate::kGeneric};
  }
  if (has_token_in(draft, lexicons.profanity)) return {Gate::kProfanity};
  if (has_token_in(draft, lexicons.platform_terms)) return {Gate::kPlatformTerms};
  return {};
}

ReplyDraft generate_reply(std::string_view raw_input, const Generator& generator,
                          const GateLexicons& lexicons, std::span<const std::string> templates,
                          Rng& rng) {
  ReplyDraft result;
  try {
    const auto cleaned = sanitize_input(raw_input);
    auto draft = generator.generate(cleaned);
    if (trim(draft).empty()) throw GenerationError("generator returned an empty draft");
    const auto verdict = apply_quality_gates(draft, cleaned, lexicons);
    if (verdict.passed()) {
      result.text = std::move(draft);
      result.provenance = Provenance::kGenerated;
      return result;
    }
    result.rejected_by = verdict.failed_gate;
  } catch (const GenerationError&) {
    result.generator_failed = true;
  } catch (const EmptyInputError&) {
    result.generator_failed = true;
  }
  if (templates.empty()) throw Error("generate_reply: fallback needed but no templates loaded");
  result.text = templates[rng.index(templates.size())];
  result.provenance = Provenance::kTemplate;
  return result;
}

namespace {

constexpr std::string_view kLearnMore = " To learn more about ";
constexpr std::string_view kClick = " click ";
constexpr std::string_view kFollow = " and follow ";

std::string truncate_at_word(std::string_view text, std::size_t budget) {
  std::string out;
  std::size_t used = 0;
  for (auto word : split_whitespace(text)) {
    const std::size_t len = code_point_length(word) + (out.empty() ? 0 : 1);
    if (used + len > budget) break;
    if (!out.empty()) out.push_back(' ');
    out += word;
    used += len;
  }
  if (!out.empty()) return out;
  // A single over-long first word: cut it on a code point boundary.
  std::size_t pos = 0;
  for (std::size_t n = 0; n < budget && pos < text.size(); ++n) next_code_point(text, pos);
  return std::string(text.substr(0, pos));
}

}  // namespace

ComposedReply compose_reply(std::string_view contextual, Topic topic,
                            std::string_view outlet_handle, std::string_view url,
                            std::size_t cap) {
  const auto ctx = trim(contextual);
  if (ctx.empty()) throw Error("compose_reply: empty contextual text");
  if (url.empty() || outlet_handle.empty()) throw Error("compose_reply: missing url or handle");

  const std::string scaffold = fmt::format("{}{}{}{}{}{}.", kLearnMore, to_string(topic), kClick,
                                           url, kFollow, outlet_handle);
  const std::size_t scaffold_len = code_point_length(scaffold);
  if (scaffold_len + 1 > cap) {
    throw Error(fmt::format("compose_reply: link and handle alone need {} of {} characters",
                            scaffold_len, cap));
  }
  ComposedReply reply;
  const std::size_t budget = cap - scaffold_len;
  reply.contextual = code_point_length(ctx) <= budget ? std::string(ctx)
                                                      : truncate_at_word(ctx, budget);
  reply.topic = topic;
  reply.outlet_handle = std::string(outlet_handle);
  reply.url = std::string(url);
  reply.full_text = reply.contextual + scaffold;
  return reply;
}

std::optional<ComposedReply> parse_reply(std::string_view text) {
  const auto learn = text.rfind(kLearnMore);
  if (learn == std::string_view::npos || learn == 0 || !text.ends_with('.')) return std::nullopt;
  ComposedReply reply;
  reply.contextual = std::string(text.substr(0, learn));
  auto rest = text.substr(learn + kLearnMore.size());
  rest.remove_suffix(1);

  const auto click = rest.find(kClick);
  if (click == std::string_view::npos) return std::nullopt;
  const auto topic = parse_topic(rest.substr(0, click));
  if (!topic) return std::nullopt;
  reply.topic = *topic;
  rest.remove_prefix(click + kClick.size());

  const auto follow = rest.rfind(kFollow);
  if (follow == std::string_view::npos) return std::nullopt;
  reply.url = std::string(rest.substr(0, follow));
  reply.outlet_handle = std::string(rest.substr(follow + kFollow.size()));
  if (reply.url.empty() || reply.url.find(' ') != std::string::npos ||
      !reply.outlet_handle.starts_with('@') || reply.outlet_handle.find(' ') != std::string::npos) {
    return std::nullopt;
  }
  reply.full_text = std::string(text);
  return reply;
}

std::vector<std::string> load_templates(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw FormatError(path.string() + ": no templates");
  return lines;
}

}  // namespace nudge
