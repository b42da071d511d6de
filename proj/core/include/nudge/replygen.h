#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "nudge/generator.h"
#include "nudge/rng.h"
#include "nudge/types.h"

namespace nudge {

// Nothing left to respond to after cleaning.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// Removes URLs (scheme-prefixed and bare domains), keeps @-mentions intact,
// drops every character other than word characters, the punctuation
// . , ! ? ' " - and whitespace, then collapses whitespace. Curly quotes are
// folded to their ASCII forms first. Throws EmptyInputError if nothing is left.
std::string sanitize_input(std::string_view raw);

enum class Gate { kEcho, kGeneric, kProfanity, kPlatformTerms };
std::string_view to_string(Gate gate);

struct GateVerdict {
  std::optional<Gate> failed_gate;
  bool passed() const { return !failed_gate.has_value(); }
};

struct GateLexicons {
  std::unordered_set<std::string> profanity;       // lowercase tokens
  std::unordered_set<std::string> platform_terms;  // lowercase tokens
  std::vector<std::string> generic_responses;      // normalized (see below)
  double echo_threshold = 0.5;

  static GateLexicons load(const std::filesystem::path& profanity,
                           const std::filesystem::path& platform_terms,
                           const std::filesystem::path& generic_responses);
};

// Lowercase, non-word characters to spaces, whitespace collapsed.
std::string normalize_for_echo(std::string_view text);
// Lowercase and whitespace collapsed; punctuation kept.
std::string normalize_for_generic(std::string_view text);

// Jaccard similarity of the character-trigram sets of the normalized texts.
// Texts shorter than three characters compare as a single whole-string gram.
double trigram_jaccard(std::string_view a, std::string_view b);

// Gates run in the order echo, generic, profanity, platform_terms; the first
// failure is reported.
GateVerdict apply_quality_gates(std::string_view draft, std::string_view input,
                                const GateLexicons& lexicons);

enum class Provenance { kGenerated, kTemplate };
std::string_view to_string(Provenance provenance);

struct ReplyDraft {
  std::string text;
  Provenance provenance = Provenance::kTemplate;
  // Why the generated draft was discarded, when it was.
  std::optional<Gate> rejected_by;
  bool generator_failed = false;
};

// sanitize -> generate -> gate. On a generator error, an empty sanitized
// input, or a failed gate, returns a uniformly drawn template. Throws only
// when that fallback is needed and `templates` is empty.
ReplyDraft generate_reply(std::string_view raw_input, const Generator& generator,
                          const GateLexicons& lexicons, std::span<const std::string> templates,
                          Rng& rng);

inline constexpr std::size_t kPlatformLengthCap = 280;

struct ComposedReply {
  std::string contextual;
  Topic topic = Topic::kSports;
  std::string outlet_handle;
  std::string url;
  std::string full_text;
};

// full_text = contextual + " To learn more about " + topic + " click " + url
//           + " and follow " + handle + "."
// When the result exceeds `cap` code points the contextual part is cut at a
// word boundary; the link and handle are never touched. Throws if the fixed
// scaffold alone leaves no room.
ComposedReply compose_reply(std::string_view contextual, Topic topic,
                            std::string_view outlet_handle, std::string_view url,
                            std::size_t cap = kPlatformLengthCap);

// Inverse of compose_reply; nullopt if the text does not have that shape.
std::optional<ComposedReply> parse_reply(std::string_view full_text);

// One template per line.
std::vector<std::string> load_templates(const std::filesystem::path& path);

}  // namespace nudge
