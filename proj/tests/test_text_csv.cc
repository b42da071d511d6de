#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "nudge/csv.h"
#include "nudge/hash.h"
#include "nudge/rng.h"
#include "nudge/text.h"
#include "nudge/types.h"

namespace nudge {
namespace {

TEST(Csv, ParsesQuotedFieldsAndEmbeddedNewlines) {
  const auto rows = parse_csv("a,b\n\"x, y\",\"say \"\"hi\"\"\nthere\"\r\n1,\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "x, y");
  EXPECT_EQ(rows[1][1], "say \"hi\"\nthere");
  EXPECT_EQ(rows[2], (CsvRow{"1", ""}));
}

TEST(Csv, EscapeRoundTrips) {
  const std::vector<std::string> fields = {"plain", "com,ma", "quo\"te", "new\nline", ""};
  std::ostringstream out;
  write_csv_row(out, fields);
  const auto rows = parse_csv(out.str());
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], fields);
}

TEST(Csv, TableRequiresColumns) {
  const auto t = CsvTable::parse("x,y\n1,2\n", "mem");
  EXPECT_EQ(t.column("y"), 1u);
  EXPECT_THROW(t.column("z"), FormatError);
  EXPECT_THROW(t.require_header({"x"}), FormatError);
  EXPECT_NO_THROW(t.require_header({"x", "y"}));
}

TEST(Csv, ParseNumbersRejectsJunk) {
  EXPECT_DOUBLE_EQ(parse_double(" 2.5 ", "t"), 2.5);
  EXPECT_THROW(parse_double("2.5x", "t"), FormatError);
  EXPECT_THROW(parse_double("", "t"), FormatError);
  EXPECT_EQ(parse_count("42", "t"), 42u);
  EXPECT_THROW(parse_count("-1", "t"), FormatError);
}

TEST(Csv, WriteFileIsAtomicAndReadLinesSkipsComments) {
  const auto dir = std::filesystem::temp_directory_path() / "nudge_csv_test";
  std::filesystem::create_directories(dir);
  write_file(dir / "f.txt", "# comment\n  alpha \n\nbeta\n");
  EXPECT_EQ(read_lines(dir / "f.txt"), (std::vector<std::string>{"alpha", "beta"}));
  EXPECT_THROW(read_file(dir / "missing.txt"), Error);
  std::filesystem::remove_all(dir);
}

TEST(Text, WordTokensSplitOnNonWordCharacters) {
  const auto tokens = word_tokens("NBA-finals 🏀 tonight, café!");
  std::vector<std::string> got;
  for (const auto& t : tokens) got.emplace_back(t.text);
  EXPECT_EQ(got, (std::vector<std::string>{"NBA", "finals", "tonight", "café"}));
  EXPECT_EQ(tokens[1].offset, 4u);
}

TEST(Text, MalformedUtf8DecodesToReplacement) {
  std::string bad = "a\xff";
  std::size_t pos = 1;
  EXPECT_EQ(next_code_point(bad, pos), U'�');
  EXPECT_EQ(pos, 2u);
  std::string truncated = "\xe2\x82";
  pos = 0;
  EXPECT_EQ(next_code_point(truncated, pos), U'�');
  EXPECT_EQ(pos, 1u);
}

TEST(Text, UrlDetection) {
  EXPECT_TRUE(looks_like_url("https://t.co/x"));
  EXPECT_TRUE(looks_like_url("www.example.org"));
  EXPECT_TRUE(looks_like_url("t.co/abc,"));
  EXPECT_TRUE(looks_like_url("nytimes.com"));
  EXPECT_FALSE(looks_like_url("@nytimes"));
  EXPECT_FALSE(looks_like_url("end."));
  EXPECT_FALSE(looks_like_url("3.5"));
}

TEST(Text, StripUrlsAndEmoji) {
  EXPECT_EQ(strip_urls_and_emoji("Vote today 🗳️ https://t.co/x  now!"), "Vote today now!");
}

TEST(Text, CodePointLength) {
  EXPECT_EQ(code_point_length("abc"), 3u);
  EXPECT_EQ(code_point_length("é🏀"), 2u);
}

TEST(Rng, DeterministicAndInRange) {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng r(11);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.index(7), 7u);
  }
}

TEST(Rng, MomentsMatchDistributions) {
  Rng r(99);
  const int n = 200000;
  double sp = 0, sn = 0, sn2 = 0, sb = 0, sg = 0;
  for (int i = 0; i < n; ++i) {
    sp += static_cast<double>(r.poisson(3.5));
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
    sb += r.beta(2, 6);
    sg += r.gamma(0.7);
  }
  EXPECT_NEAR(sp / n, 3.5, 0.03);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.015);
  EXPECT_NEAR(sb / n, 0.25, 0.003);
  EXPECT_NEAR(sg / n, 0.7, 0.01);
}

TEST(Rng, LargePoissonMean) {
  Rng r(5);
  double s = 0;
  for (int i = 0; i < 20000; ++i) s += static_cast<double>(r.poisson(120.0));
  EXPECT_NEAR(s / 20000, 120.0, 0.4);
}

TEST(Rng, StableHashAndMixAreFixed) {
  // FNV-1a reference values.
  EXPECT_EQ(stable_hash(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(stable_hash("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_EQ(mix_seed(1, 2), mix_seed(1, 2));
}

TEST(Hash, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Types, EnumNamesRoundTrip) {
  for (auto t : kAllTopics) EXPECT_EQ(parse_topic(to_string(t)), t);
  for (auto a : kAllArms) EXPECT_EQ(parse_arm(to_string(a)), a);
  for (auto o : kAllOutcomes) EXPECT_EQ(parse_outcome(to_string(o)), o);
  EXPECT_EQ(parse_arm("female"), Arm::kFemaleBot);
  EXPECT_FALSE(parse_topic("politics"));
}

}  // namespace
}  // namespace nudge
