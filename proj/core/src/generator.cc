#include "nudge/generator.h"

#include <array>

#include <fmt/core.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "nudge/rng.h"
#include "nudge/text.h"

namespace nudge {

namespace {

constexpr std::array<std::string_view, 8> kFrames = {
    "Honestly, {} is all anyone is talking about today.",
    "I have been following the {} news all week.",
    "Can't argue with that take on {}.",
    "Hard to disagree, {} has been on a roll lately.",
    "Good point about {}, I had not thought of it that way.",
    "Not sure everyone sees {} the same way, but fair enough.",
    "Anything about {} gets my attention these days.",
    "Interesting thought on {}, time will tell.",
};

std::string salient_word(std::string_view input) {
  std::string best;
  for (const auto& token : word_tokens(input)) {
    if (token.text.size() > best.size() && token.text.size() >= 4) {
      best = to_lower_ascii(token.text);
    }
  }
  return best.empty() ? "this" : best;
}

}  // namespace

std::string TemplateEchoGenerator::generate(std::string_view input) const {
  if (trim(input).empty()) throw GenerationError("reference generator: empty input");
  const auto frame = kFrames[stable_hash(input) % kFrames.size()];
  return fmt::format(fmt::runtime(frame), salient_word(input));
}

HttpGenerator::HttpGenerator(std::string url, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("generator url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (url.starts_with("https://")) {
    throw ConfigError("generator url: https is not supported by this build");
  }
}

std::string HttpGenerator::generate(std::string_view input) const {
  httplib::Client client(scheme_host_port_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  const nlohmann::json body = {{"input", std::string(input)}};
  auto response = client.Post(path_, body.dump(), "application/json");
  if (!response) {
    throw GenerationError(fmt::format("generator request failed: {}",
                                      httplib::to_string(response.error())));
  }
  if (response->status != 200) {
    throw GenerationError(fmt::format("generator returned HTTP {}", response->status));
  }
  const auto parsed = nlohmann::json::parse(response->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("draft") ||
      !parsed["draft"].is_string()) {
    throw GenerationError("generator response is not {\"draft\": string}");
  }
  auto draft = parsed["draft"].get<std::string>();
  if (trim(draft).empty()) throw GenerationError("generator returned an empty draft");
  return std::string(trim(draft));
}

}  // namespace nudge
