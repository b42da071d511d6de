#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include "nudge/types.h"

namespace nudge {

// Raised by a Generator that could not produce a draft. generate_reply
// treats it as a signal to fall back to a template.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Produces a contextual draft reply for a cleaned input post. Implementations
// return non-empty text or throw GenerationError; they never return "".
// generate() must be safe to call concurrently.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string generate(std::string_view input) const = 0;
};

// Deterministic reference generator: picks a reply frame from a hash of the
// input and fills it with the input's most salient word.
class TemplateEchoGenerator final : public Generator {
 public:
  std::string generate(std::string_view input) const override;
};

// Client for an external text-generation service.
//
//   POST <url>  {"input": "<cleaned post>"}  ->  200 {"draft": "<reply>"}
//
// Each call opens its own connection, so one instance can serve concurrent
// callers. Transport errors, timeouts, non-200 responses, malformed JSON and
// empty drafts all surface as GenerationError.
class HttpGenerator final : public Generator {
 public:
  HttpGenerator(std::string url, std::chrono::milliseconds timeout);
  std::string generate(std::string_view input) const override;

 private:
  std::string scheme_host_port_;
  std::string path_;
  std::chrono::milliseconds timeout_;
};

}  // namespace nudge
