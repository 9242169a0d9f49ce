#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "biasvote/error.hpp"
#include "biasvote/textprep.hpp"

using namespace biasvote::textprep;

TEST(PreprocessTest, EmptyInput) { EXPECT_TRUE(preprocess("").empty()); }

TEST(PreprocessTest, UrlsPunctuationHashtags) {
  const TokenSequence want{"hello", "world", "#buildthewall"};
  EXPECT_EQ(preprocess("Hello WORLD!!! https://t.co/x #BuildTheWall"), want);
}

TEST(PreprocessTest, MentionsCollapse) {
  const TokenSequence want{"@user", "thanks", "@user"};
  EXPECT_EQ(preprocess("@Alice thanks @bob_99!"), want);
}

TEST(PreprocessTest, UrlForms) {
  const TokenSequence want{"see", "and"};
  EXPECT_EQ(preprocess("see www.example.com/page and http://bit.ly/abc"), want);
}

TEST(PreprocessTest, EmojiBecomeAliases) {
  const auto toks = preprocess("great \xF0\x9F\x98\x80 day");
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[1], ":grinning_face:");
}

TEST(PreprocessTest, VariationSelectorIgnored) {
  // U+2764 with and without U+FE0F
  EXPECT_EQ(preprocess("\xE2\x9D\xA4\xEF\xB8\x8F"), preprocess("\xE2\x9D\xA4"));
  EXPECT_FALSE(preprocess("\xE2\x9D\xA4").empty());
}

TEST(PreprocessTest, NonAsciiDropped) {
  const TokenSequence want{"caf", "ol"};
  EXPECT_EQ(preprocess("caf\xC3\xA9 \xC2\xA1ol\xC3\xA9"), want);
}

TEST(PreprocessTest, UnicodePunctuationSeparates) {
  const TokenSequence want{"one", "two"};
  EXPECT_EQ(preprocess("one\xE2\x80\x94two"), want);  // em dash
}

TEST(PreprocessTest, NfcBeforeRules) {
  // e + combining acute composes then is dropped like precomposed é
  EXPECT_EQ(preprocess("cafe\xCC\x81"), preprocess("caf\xC3\xA9"));
}

TEST(PreprocessTest, NoEmptyOrSpacedTokens) {
  std::mt19937_64 gen(11);
  const std::string alphabet = "aZ #@:_!?.,/\t\n-0123456789\xC3\xA9\xF0\x9F\x98\x80";
  for (int round = 0; round < 300; ++round) {
    std::string s;
    for (int i = 0; i < 40; ++i) s += alphabet[gen() % alphabet.size()];
    for (const auto& t : preprocess(s)) {
      EXPECT_FALSE(t.empty());
      EXPECT_EQ(t.find_first_of(" \t\n"), std::string::npos) << t;
    }
  }
}

TEST(PreprocessTest, Idempotent) {
  std::mt19937_64 gen(5);
  const std::vector<std::string> pieces{"Hello", "#Tag", "@who", "http://x.co/a", ":)", "\xF0\x9F\x98\x82",
                                        "don't", "www.site.org", "...", "\xE2\x9D\xA4\xEF\xB8\x8F", "#1",
                                        "a:b:", ":smile:", "x@y", "\xC3\xA9t\xC3\xA9", "12:30", "*"};
  for (int round = 0; round < 500; ++round) {
    std::string s;
    const int n = 1 + static_cast<int>(gen() % 8);
    for (int i = 0; i < n; ++i) s += pieces[gen() % pieces.size()] + ((gen() % 3) ? " " : "");
    const auto once = preprocess(s);
    EXPECT_EQ(preprocess(join(once)), once) << s;
  }
}

TEST(PreprocessTest, HashtagsSurvive) {
  const auto toks = preprocess("lol #SendThemBack, ok?");
  EXPECT_NE(std::find(toks.begin(), toks.end(), "#sendthemback"), toks.end());
}

TEST(EmojiTableTest, BundledIsVersioned) {
  auto t = EmojiTable::bundled();
  EXPECT_GT(t->size(), 1000u);
  EXPECT_NE(t->version().find("emoji-alias-table"), std::string::npos);
}

TEST(EmojiTableTest, CustomTableLongestMatch) {
  auto table = std::make_shared<const EmojiTable>(EmojiTable::parse("# test v1\n1F600\t:one:\n1F600 1F601\t:two:\n"));
  Preprocessor p(table);
  EXPECT_EQ(p("\xF0\x9F\x98\x80\xF0\x9F\x98\x81"), TokenSequence{":two:"});
  EXPECT_EQ(p("\xF0\x9F\x98\x80"), TokenSequence{":one:"});
  EXPECT_TRUE(p("\xF0\x9F\x98\x82").empty());  // absent from table
  EXPECT_EQ(table->version(), "test v1");
}

TEST(FeaturizeTest, EmptyIsZero) {
  const auto v = featurize({});
  EXPECT_TRUE(v.empty());
  EXPECT_EQ(v.norm(), 0.0);
  EXPECT_EQ(v.dimension, 1u << 18);
}

TEST(FeaturizeTest, UnigramBagSymmetry) {
  FeaturizerConfig uni{{1}, 1u << 18};
  EXPECT_EQ(featurize({"a", "b"}, uni), featurize({"b", "a"}, uni));
  EXPECT_NE(featurize({"a", "b"}), featurize({"b", "a"}));
}

TEST(FeaturizeTest, UnitNormAndBounds) {
  std::mt19937_64 gen(9);
  for (int round = 0; round < 100; ++round) {
    TokenSequence toks;
    const int n = 1 + static_cast<int>(gen() % 20);
    for (int i = 0; i < n; ++i) toks.push_back("w" + std::to_string(gen() % 30));
    const auto v = featurize(toks);
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    EXPECT_TRUE(std::is_sorted(v.indices.begin(), v.indices.end()));
    for (std::size_t i = 0; i < v.indices.size(); ++i) {
      EXPECT_LT(v.indices[i], 1u << 18);
      EXPECT_TRUE(std::isfinite(v.values[i]));
      EXPECT_NE(v.values[i], 0.0);
      if (i) EXPECT_LT(v.indices[i - 1], v.indices[i]);
    }
    EXPECT_EQ(featurize(toks), v);
  }
}

TEST(FeaturizeTest, DimensionMustBePowerOfTwo) {
  EXPECT_THROW(featurize({"a"}, FeaturizerConfig{{1}, 1000}), biasvote::InvalidArgument);
}

TEST(FeaturizeTest, StableHashPinned) {
  EXPECT_EQ(stable_hash("abc"), stable_hash("abc"));
  EXPECT_NE(stable_hash("abc"), stable_hash("abd"));
}
