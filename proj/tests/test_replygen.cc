#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <mutex>

#include "nudge/generator.h"
#include "nudge/replygen.h"
#include "nudge/rng.h"
#include "nudge/text.h"

namespace nudge {
namespace {

const std::filesystem::path kData = NUDGE_DATA_DIR;

const GateLexicons& lexicons() {
  static const GateLexicons lex = GateLexicons::load(
      kData / "profanity.txt", kData / "platform_terms.txt", kData / "generic_responses.txt");
  return lex;
}

const std::vector<std::string>& templates() {
  static const auto t = load_templates(kData / "templates.txt");
  return t;
}

TEST(Sanitize, Examples) {
  EXPECT_EQ(sanitize_input("Great game!! 🏀 https://t.co/x"), "Great game!!");
  EXPECT_EQ(sanitize_input("yoga   retreat"), "yoga retreat");
  EXPECT_EQ(sanitize_input("@Lakers_fan #Finals tonight www.nba.com"), "@Lakers_fan Finals tonight");
  EXPECT_EQ(sanitize_input("It’s “huge”"), "It's \"huge\"");
  EXPECT_THROW(sanitize_input("🏀 https://t.co/x"), EmptyInputError);
  EXPECT_THROW(sanitize_input("   "), EmptyInputError);
}

// Independent character walk over a known alphabet.
struct Piece {
  std::string text;
  bool url = false;
};

char32_t decode(const std::string& s, std::size_t& i) {
  const auto b = static_cast<unsigned char>(s[i]);
  int len = b < 0x80 ? 1 : b < 0xE0 ? 2 : b < 0xF0 ? 3 : 4;
  char32_t cp = len == 1 ? b : len == 2 ? (b & 0x1F) : len == 3 ? (b & 0x0F) : (b & 0x07);
  for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
  i += len;
  return cp;
}

std::string encode(char32_t cp) {
  std::string out;
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
  return out;
}

std::string oracle_clean_token(const std::string& tok) {
  std::string out;
  std::size_t i = 0;
  if (tok[0] == '@') {
    std::size_t j = 1;
    while (j < tok.size() && (std::isalnum(static_cast<unsigned char>(tok[j])) || tok[j] == '_')) ++j;
    if (j > 1) {
      out = tok.substr(0, j);
      i = j;
    }
  }
  while (i < tok.size()) {
    char32_t cp = decode(tok, i);
    if (cp == 0x2018 || cp == 0x2019) cp = '\'';
    if (cp == 0x201C || cp == 0x201D) cp = '"';
    const bool ascii_word = cp < 0x80 && std::isalnum(static_cast<int>(cp));
    const bool latin = cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7;
    const bool punct = cp < 0x80 && std::string_view(".,!?'\"-").find(static_cast<char>(cp)) !=
                                         std::string_view::npos;
    if (ascii_word || latin || punct) out += encode(cp);
  }
  return out;
}

TEST(Sanitize, MatchesCharacterWalkOracle) {
  const std::vector<std::string> words = {"game", "Yoga", "café", "naïve", "Oscars", "x2",
                                          "LeBron", "ÆON", "tonight", "fan"};
  const std::vector<std::string> decor = {"!", "?", "...", ",", "#", "$", "%", ";", ":", "(",
                                          ")", "🏀", "🎬", "’", "“", "”", "-", "*", "×", "&"};
  const std::vector<std::string> urls = {"https://t.co/abc", "http://x.io/p?q=1", "www.espn.com",
                                         "(https://bit.ly/z)", "nytimes.com/section/sports"};
  const std::vector<std::string> seps = {" ", "  ", "\t", "\n"};
  Rng rng(500);
  int checked = 0;
  for (int p = 0; p < 500; ++p) {
    std::vector<Piece> pieces;
    const auto n = 1 + rng.index(12);
    for (std::uint64_t k = 0; k < n; ++k) {
      Piece piece;
      const auto kind = rng.index(10);
      if (kind == 0) {
        piece.text = urls[rng.index(urls.size())];
        piece.url = true;
      } else if (kind == 1) {
        piece.text = "@user_" + std::to_string(rng.index(100)) + (rng.uniform() < 0.5 ? "!" : "");
      } else if (kind == 2) {
        piece.text = decor[rng.index(decor.size())];
      } else {
        if (rng.uniform() < 0.3) piece.text += decor[rng.index(decor.size())];
        piece.text += words[rng.index(words.size())];
        if (rng.uniform() < 0.4) piece.text += decor[rng.index(decor.size())];
      }
      pieces.push_back(piece);
    }
    std::string post;
    std::string expected;
    for (const auto& piece : pieces) {
      post += piece.text + seps[rng.index(seps.size())];
      if (piece.url) continue;
      const auto cleaned = oracle_clean_token(piece.text);
      if (cleaned.empty()) continue;
      if (!expected.empty()) expected += ' ';
      expected += cleaned;
    }
    if (expected.empty()) {
      EXPECT_THROW(sanitize_input(post), EmptyInputError) << post;
    } else {
      ASSERT_EQ(sanitize_input(post), expected) << post;
      ++checked;
    }
  }
  EXPECT_GT(checked, 400);
}

TEST(Gates, VerbatimEchoFailsFirst) {
  const std::string input = "Great game last night, what a comeback";
  EXPECT_EQ(apply_quality_gates(input, input, lexicons()).failed_gate, Gate::kEcho);
  // Echo is checked before profanity.
  const std::string crude = "what a crap game";
  EXPECT_EQ(apply_quality_gates(crude, crude, lexicons()).failed_gate, Gate::kEcho);
}

TEST(Gates, PlatformTermsProfanityGeneric) {
  const std::string input = "The pitcher threw a perfect game tonight";
  EXPECT_EQ(apply_quality_gates("Post that on the subreddit", input, lexicons()).failed_gate,
            Gate::kPlatformTerms);
  EXPECT_EQ(apply_quality_gates("Upvoted, totally agree", input, lexicons()).failed_gate,
            Gate::kPlatformTerms);
  EXPECT_EQ(apply_quality_gates("That was crap honestly", input, lexicons()).failed_gate,
            Gate::kProfanity);
  // Whole tokens only.
  EXPECT_TRUE(apply_quality_gates("Classic assessment there", input, lexicons()).passed());
  EXPECT_EQ(apply_quality_gates("I am not sure if you're serious or not,   but I'm GOING with the "
                                "latter",
                                input, lexicons())
                .failed_gate,
            Gate::kGeneric);
  EXPECT_TRUE(
      apply_quality_gates("He's the best player in the league", input, lexicons()).passed());
  EXPECT_THROW(apply_quality_gates("  ", input, lexicons()), Error);
}

TEST(Gates, TrigramJaccard) {
  EXPECT_DOUBLE_EQ(trigram_jaccard("abcd", "ABCD!"), 1.0);
  EXPECT_DOUBLE_EQ(trigram_jaccard("abc", "xyz"), 0.0);
  // {abc, bcd} vs {bcd, cde}: 1 shared of 3.
  EXPECT_NEAR(trigram_jaccard("abcd", "bcde"), 1.0 / 3, 1e-15);
  EXPECT_DOUBLE_EQ(trigram_jaccard("ab", "ab"), 1.0);
}

class FailingGenerator final : public Generator {
 public:
  std::string generate(std::string_view) const override { throw GenerationError("down"); }
};

class FixedGenerator final : public Generator {
 public:
  explicit FixedGenerator(std::string text) : text_(std::move(text)) {}
  std::string generate(std::string_view) const override { return text_; }

 private:
  std::string text_;
};

// Fails with a planted probability, otherwise returns a clean draft.
class FlakyGenerator final : public Generator {
 public:
  FlakyGenerator(double p, std::uint64_t seed) : p_(p), rng_(seed) {}
  std::string generate(std::string_view) const override {
    std::lock_guard lock(mu_);
    if (rng_.uniform() < p_) throw GenerationError("flaky");
    return "That sounds like a fun afternoon to me";
  }

 private:
  double p_;
  mutable std::mutex mu_;
  mutable Rng rng_;
};

TEST(GenerateReply, ErroringGeneratorFallsBackToTemplate) {
  Rng rng(1);
  const auto r = generate_reply("Great game tonight", FailingGenerator(), lexicons(), templates(),
                                rng);
  EXPECT_EQ(r.provenance, Provenance::kTemplate);
  EXPECT_TRUE(r.generator_failed);
  EXPECT_NE(std::find(templates().begin(), templates().end(), r.text), templates().end());
}

TEST(GenerateReply, EmptyInputAndGateFailureFallBack) {
  Rng rng(2);
  auto r = generate_reply("🏀 https://t.co/x", TemplateEchoGenerator(), lexicons(), templates(),
                          rng);
  EXPECT_EQ(r.provenance, Provenance::kTemplate);
  r = generate_reply("nice game", FixedGenerator("go check the subreddit"), lexicons(),
                     templates(), rng);
  EXPECT_EQ(r.provenance, Provenance::kTemplate);
  EXPECT_EQ(r.rejected_by, Gate::kPlatformTerms);
  EXPECT_THROW(generate_reply("nice game", FailingGenerator(), lexicons(), {}, rng), Error);
}

TEST(GenerateReply, PassingDraftIsKept) {
  Rng rng(3);
  const std::string raw = "Watching the Lakers tonight with friends https://t.co/q";
  const auto expected = TemplateEchoGenerator().generate(sanitize_input(raw));
  const auto r = generate_reply(raw, TemplateEchoGenerator(), lexicons(), templates(), rng);
  ASSERT_EQ(r.provenance, Provenance::kGenerated);
  EXPECT_EQ(r.text, expected);
  EXPECT_FALSE(r.rejected_by.has_value());
}

TEST(GenerateReply, TemplateFractionMatchesPlantedFailureRate) {
  const FlakyGenerator gen(0.3, 99);
  Rng rng(4);
  Rng words(5);
  const int n = 1000;
  int fallback = 0;
  for (int i = 0; i < n; ++i) {
    const std::string raw = "post number " + std::to_string(i) + " about team" +
                            std::to_string(words.index(1000));
    fallback += generate_reply(raw, gen, lexicons(), templates(), rng).provenance ==
                Provenance::kTemplate;
  }
  const double sigma = std::sqrt(0.3 * 0.7 / n);
  EXPECT_NEAR(static_cast<double>(fallback) / n, 0.3, 3 * sigma);
}

TEST(GenerateReply, TemplatesDrawnUniformly) {
  Rng rng(6);
  std::map<std::string, int> counts;
  const int n = 5000;
  for (int i = 0; i < n; ++i) {
    ++counts[generate_reply("x", FailingGenerator(), lexicons(), templates(), rng).text];
  }
  ASSERT_EQ(counts.size(), templates().size());
  const double e = static_cast<double>(n) / templates().size();
  for (const auto& [t, c] : counts) EXPECT_NEAR(c, e, 5 * std::sqrt(e));
}

TEST(Compose, TemplateConcatenation) {
  const auto r = compose_reply("Interesting!", Topic::kLifestyle, "@nytimes",
                               "https://www.nytimes.com/section/style");
  EXPECT_EQ(r.full_text,
            "Interesting! To learn more about lifestyle click "
            "https://www.nytimes.com/section/style and follow @nytimes.");
}

TEST(Compose, LongContextTruncatedAtWordBoundary) {
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    std::string ctx;
    while (code_point_length(ctx) < 300) {
      ctx += std::string(1 + rng.index(12), static_cast<char>('a' + rng.index(26)));
      if (rng.uniform() < 0.1) ctx += "é";
      ctx += ' ';
    }
    ctx.pop_back();
    const std::string url = "https://www.espn.com/nba";
    const auto r = compose_reply(ctx, Topic::kSports, "@espn", url);
    const std::string scaffold =
        " To learn more about sports click " + url + " and follow @espn.";
    EXPECT_LE(code_point_length(r.full_text), kPlatformLengthCap);
    EXPECT_TRUE(r.full_text.ends_with(scaffold));
    EXPECT_EQ(r.full_text, r.contextual + scaffold);
    // The kept text is a word prefix of the original, and the next word would not fit.
    ASSERT_TRUE(ctx.starts_with(r.contextual));
    ASSERT_EQ(ctx[r.contextual.size()], ' ');
    const auto next_end = ctx.find(' ', r.contextual.size() + 1);
    const auto longer = ctx.substr(0, next_end);
    EXPECT_GT(code_point_length(longer) + code_point_length(scaffold), kPlatformLengthCap);
  }
}

TEST(Compose, ScaffoldTooLongIsAnError) {
  const std::string url = "https://example.com/" + std::string(300, 'a');
  EXPECT_THROW(compose_reply("hi", Topic::kSports, "@x", url), Error);
  EXPECT_THROW(compose_reply("", Topic::kSports, "@x", "https://a.b"), Error);
}

TEST(Compose, ParseRoundTrips) {
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const auto topic = kAllTopics[rng.index(3)];
    const std::string ctx = "Reply " + std::to_string(k) + ". To learn more about it!";
    const auto r = compose_reply(ctx, topic, "@outlet" + std::to_string(k),
                                 "https://o.example/s" + std::to_string(k));
    const auto back = parse_reply(r.full_text);
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(back->contextual, r.contextual);
    EXPECT_EQ(back->topic, topic);
    EXPECT_EQ(back->url, r.url);
    EXPECT_EQ(back->outlet_handle, r.outlet_handle);
  }
  EXPECT_FALSE(parse_reply("just some reply").has_value());
  EXPECT_FALSE(parse_reply("x To learn more about politics click https://a and follow @b.")
                   .has_value());
}

}  // namespace
}  // namespace nudge
