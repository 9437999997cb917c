#include <sstream>

#include "doctest.h"
#include "lmkit/error.hh"
#include "support.hh"

using namespace lmkit;
using lmtest::corpus_of;

TEST_CASE("build_vocab counts and ranks words") {
  auto corpus = corpus_of({"a b a", "c a"});
  Vocabulary v = build_vocab(corpus, std::nullopt, 1);
  REQUIRE(v.size() == 6);
  CHECK(v.word(0) == "<s>");
  CHECK(v.word(1) == "</s>");
  CHECK(v.word(2) == "<unk>");
  CHECK(v.word(3) == "a");
  CHECK(v.count(3) == 3);
  CHECK(v.word(4) == "b");
  CHECK(v.count(4) == 1);
  CHECK(v.word(5) == "c");
  CHECK(v.count(5) == 1);
}

TEST_CASE("build_vocab caps size including reserved symbols") {
  auto corpus = corpus_of({"a b a", "c a"});
  Vocabulary v = build_vocab(corpus, kReservedCount + 1, 1);
  REQUIRE(v.size() == 4);
  CHECK(v.word(3) == "a");
  CHECK_FALSE(v.find("b").has_value());
  CHECK(v.count(kUnkId) == 2);
}

TEST_CASE("build_vocab applies min_count and rejects empty input") {
  auto corpus = corpus_of({"x y x", "y z x"});
  Vocabulary v = build_vocab(corpus, std::nullopt, 2);
  CHECK(v.size() == 5);
  CHECK(v.find("x"));
  CHECK(v.find("y"));
  CHECK_FALSE(v.find("z"));

  std::vector<Sentence> empty;
  CHECK_THROWS_AS(build_vocab(empty, std::nullopt, 1), Error);
  try {
    build_vocab(empty, std::nullopt, 1);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kEmptyCorpus);
  }
}

TEST_CASE("frequency ties break lexicographically") {
  auto corpus = corpus_of({"zeta alpha mid", "mid alpha zeta"});
  Vocabulary v = build_vocab(corpus, kReservedCount + 2, 1);
  CHECK(v.word(3) == "alpha");
  CHECK(v.word(4) == "mid");
}

TEST_CASE("map_tokens maps unknown words to <unk>") {
  Vocabulary v = Vocabulary::from_words({"<s>", "</s>", "<unk>", "a", "b"});
  Sentence s = split_words("a b a");
  CHECK(map_tokens(v, s) == IdSentence{3, 4, 3});
  Vocabulary only_a = Vocabulary::from_words({"<s>", "</s>", "<unk>", "a"});
  Sentence t = split_words("a b");
  CHECK(map_tokens(only_a, t) == IdSentence{3, kUnkId});
  CHECK(map_tokens(v, Sentence{}).empty());
  Sentence bounds = split_words("<s> a </s>");
  CHECK(map_tokens(v, bounds) == IdSentence{kBosId, 3, kEosId});
}

TEST_CASE("oov_rate") {
  Vocabulary ab = Vocabulary::from_words({"<s>", "</s>", "<unk>", "a", "b"});
  Vocabulary a = Vocabulary::from_words({"<s>", "</s>", "<unk>", "a"});
  CHECK(oov_rate(ab, corpus_of({"a b a"})) == 0.0);
  CHECK(oov_rate(a, corpus_of({"a b"})) == 0.5);
  CHECK(oov_rate(a, corpus_of({"<s> a b </s>"})) == 0.5);
  std::vector<Sentence> empty;
  CHECK_THROWS_AS(oov_rate(a, empty), Error);
}

TEST_CASE("oov_rate properties on a synthetic corpus") {
  auto corpus = lmtest::synthetic_corpus(3, 300);
  auto eval = lmtest::synthetic_corpus(4, 100);
  CHECK(oov_rate(build_vocab(corpus, std::nullopt, 1), corpus) == 0.0);
  double previous = -1;
  for (std::size_t cap : {70u, 50u, 30u, 10u, 3u}) {
    double r = oov_rate(build_vocab(corpus, cap, 1), eval);
    CHECK(r >= previous);
    previous = r;
  }
  CHECK(build_vocab(corpus, 40, 1) == build_vocab(corpus, 40, 1));
}

TEST_CASE("vocabulary file round trip") {
  auto corpus = corpus_of({"a b a", "c a"});
  Vocabulary v = build_vocab(corpus, std::nullopt, 1);
  std::ostringstream out;
  write_vocab(v, out);
  CHECK(out.str() == "<s>\t2\n</s>\t2\n<unk>\t0\na\t3\nb\t1\nc\t1\n");
  std::istringstream in(out.str());
  Vocabulary back = read_vocab(in);
  CHECK(back == v);
  CHECK(back.count(3) == 3);
}

TEST_CASE("from_words validates reserved prefix and duplicates") {
  CHECK_THROWS_AS(Vocabulary::from_words({"a", "<s>", "</s>"}), Error);
  CHECK_THROWS_AS(Vocabulary::from_words({"<s>", "</s>", "<unk>", "a", "a"}), Error);
  CHECK(Vocabulary().size() == 3);
}
