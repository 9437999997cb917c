#include <cstring>
#include <future>
#include <set>
#include <sstream>

#include "doctest.h"
#include "lmkit/arpa.hh"
#include "lmkit/error.hh"
#include "lmkit/serve.hh"
#include "support.hh"

using namespace lmkit;

namespace {

const lmtest::Trained &fixture() {
  static const lmtest::Trained t = lmtest::train(lmtest::synthetic_corpus(21, 150), 3, DiscountConfig::auto_estimate());
  return t;
}

std::vector<LmQuery> random_queries(const BackoffModel &m, std::size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<LmQuery> qs;
  const std::size_t v = m.vocab().size();
  for (std::size_t i = 0; i < n; ++i) {
    LmQuery q;
    std::size_t len = rng.below(m.order());
    for (std::size_t k = 0; k < len; ++k) q.history.push_back(rng.below(v));
    q.word = 1 + rng.below(v - 1);
    qs.push_back(q);
  }
  return qs;
}

std::vector<double> local(const BackoffModel &m, const std::vector<LmQuery> &qs) {
  std::vector<double> out;
  for (const auto &q : qs) out.push_back(m.log10_prob(q.history, q.word));
  return out;
}

bool bit_equal(const std::vector<double> &a, const std::vector<double> &b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

Lattice test_lattice(const lmtest::Trained &t, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> lexicon(t.vocab->words().begin() + 3, t.vocab->words().end());
  return noisy_lattice(lmtest::synthetic_corpus(seed, 1).front(), lexicon, LatticeNoise{}, rng);
}

}  // namespace

TEST_CASE("mix64 is one splitmix64 step") {
  // First output of the reference splitmix64 generator seeded with 0.
  CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
  uint64_t z = 1 + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  CHECK(mix64(1) == z);
}

TEST_CASE("sharding partitions the entries") {
  const auto &m = *fixture().model;
  for (std::size_t s : {1, 4, 7}) {
    ShardedModel sm = shard_model(m, s);
    REQUIRE(sm.shards.size() == s);
    std::size_t total = 0;
    for (std::size_t i = 0; i < s; ++i) {
      CHECK(sm.shards[i]->entry_count() == sm.plan.entry_counts[i]);
      total += sm.plan.entry_counts[i];
    }
    CHECK(total == m.total_size());
    for (int n = 1; n <= m.order(); ++n) {
      for (std::size_t i = 0; i < m.size(n); ++i) {
        auto key = m.level(n).keys.key(i);
        std::size_t owner = shard_of(key.front(), s);
        for (std::size_t j = 0; j < s; ++j) CHECK(sm.shards[j]->find(key).has_value() == (j == owner));
        auto got = sm.shards[owner]->find(key);
        CHECK(got->logprob == m.level(n).logprob[i]);
      }
    }
  }
}

TEST_CASE("the bigram 'a b' lives on exactly one shard") {
  BackoffModel m = read_arpa_file(lmtest::data_path("bigram.arpa"));
  WordId a = m.vocab().id("a"), b = m.vocab().id("b");
  std::vector<WordId> key{a, b};
  ShardedModel sm = shard_model(m, 4);
  std::size_t expect = mix64(a) % 4;
  for (std::size_t j = 0; j < 4; ++j) CHECK(sm.shards[j]->find(key).has_value() == (j == expect));
  CHECK(sm.shards[expect]->find(key)->logprob == -0.301);
}

TEST_CASE("shard files round trip") {
  ShardedModel sm = shard_model(*fixture().model, 3);
  for (const auto &s : sm.shards) {
    std::stringstream buf;
    write_shard(*s, buf);
    CHECK(buf.str().substr(0, 8) == "LMKSHRD1");
    CHECK(read_shard(buf) == *s);
  }
  std::stringstream bad("LMKSHRD0xxxxxxxxxxxxxxxxxxxxxxxx");
  CHECK_THROWS_AS(read_shard(bad), Error);
}

TEST_CASE("batched lookups match local scoring bit for bit") {
  const auto &t = fixture();
  auto qs = random_queries(*t.model, 50, 3);
  for (std::size_t s : {1, 2, 3, 5, 8}) {
    ShardedModel sm = shard_model(*t.model, s);
    ShardedClient client = connect_in_process(t.vocab, sm);
    std::vector<std::size_t> before(s);
    for (std::size_t i = 0; i < s; ++i) before[i] = client.transport(i).rounds();
    CHECK(bit_equal(client.batch_lookup(qs), local(*t.model, qs)));
    for (std::size_t i = 0; i < s; ++i) CHECK(client.transport(i).rounds() - before[i] <= 1);
  }
}

TEST_CASE("empty batch contacts nobody") {
  ShardedClient client = connect_in_process(fixture().vocab, shard_model(*fixture().model, 2));
  std::size_t r0 = client.transport(0).rounds(), r1 = client.transport(1).rounds();
  CHECK(client.batch_lookup({}).empty());
  CHECK(client.transport(0).rounds() == r0);
  CHECK(client.transport(1).rounds() == r1);
}

TEST_CASE("client rejects a different vocabulary and out-of-range ids") {
  const auto &t = fixture();
  auto other = std::make_shared<const Vocabulary>(Vocabulary::from_words({"<s>", "</s>", "<unk>", "zz"}));
  try {
    connect_in_process(other, shard_model(*t.model, 2));
    FAIL("expected VocabMismatch");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kVocabMismatch);
  }
  ShardedClient client = connect_in_process(t.vocab, shard_model(*t.model, 2));
  LmQuery q{{}, static_cast<WordId>(t.vocab->size() + 5)};
  CHECK_THROWS_AS(client.batch_lookup({q}), Error);
}

TEST_CASE("wire frames decode what they encode") {
  std::vector<std::vector<WordId>> keys{{1}, {4, 5}, {}};
  Frame f = make_lookup(keys);
  std::string bytes = encode_frame(f);
  REQUIRE(bytes.size() == 4 + 1 + f.payload.size());
  CHECK(static_cast<uint8_t>(bytes[4]) == static_cast<uint8_t>(MessageType::kLookup));
  ShardStore empty;
  Frame reply = handle_request(empty, Frame{MessageType::kHealth, "junk"});
  CHECK(reply.type == MessageType::kError);
}

TEST_CASE("endpoints and manifests parse") {
  Endpoint e = parse_endpoint("10.0.0.2:7001");
  CHECK(e.host == "10.0.0.2");
  CHECK(e.port == 7001);
  CHECK_THROWS_AS(parse_endpoint("nohost"), Error);
  CHECK_THROWS_AS(parse_endpoint("h:99999"), Error);
  std::istringstream m("1\t127.0.0.1:2\n0\t127.0.0.1:1\n");
  auto eps = read_shard_manifest(m);
  REQUIRE(eps.size() == 2);
  CHECK(eps[0].port == 1);
  std::istringstream gap("0\th:1\n2\th:3\n");
  CHECK_THROWS_AS(read_shard_manifest(gap), Error);
}

TEST_CASE("TCP servers answer health, concurrent clients and failures") {
  const auto &t = fixture();
  ShardedModel sm = shard_model(*t.model, 3);
  std::vector<std::unique_ptr<ShardServer>> servers;
  std::vector<Endpoint> eps;
  for (const auto &s : sm.shards) {
    servers.push_back(serve_shard(s, Endpoint{"127.0.0.1", 0}));
    eps.push_back(servers.back()->endpoint());
  }
  ShardedClient client = connect_tcp(t.vocab, eps);
  for (std::size_t i = 0; i < 3; ++i) CHECK(client.entry_count(i) == sm.plan.entry_counts[i]);

  auto qs = random_queries(*t.model, 200, 8);
  auto expect = local(*t.model, qs);
  CHECK(bit_equal(client.batch_lookup(qs), expect));

  std::vector<std::future<std::vector<double>>> futures;
  for (int c = 0; c < 8; ++c) {
    futures.push_back(std::async(std::launch::async, [&] {
      ShardedClient mine = connect_tcp(t.vocab, eps);
      return mine.batch_lookup(qs);
    }));
  }
  for (auto &f : futures) CHECK(bit_equal(f.get(), expect));

  Lattice lat = test_lattice(t, 4);
  CHECK(rescore_remote(lat, client, "lm", 3) == rescore(lat, *t.model, "lm", 3));

  servers[1]->stop();
  try {
    rescore_remote(lat, client, "lm", 3);
    FAIL("expected ShardUnavailable");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kShardUnavailable);
  }
  CHECK_THROWS_AS(connect_tcp(t.vocab, eps), Error);
}

TEST_CASE("binding a port twice fails") {
  auto store = shard_model(*fixture().model, 1).shards.front();
  auto first = serve_shard(store, Endpoint{"127.0.0.1", 0});
  try {
    serve_shard(store, first->endpoint());
    FAIL("expected BindFailure");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kBindFailure);
  }
}

TEST_CASE("remote rescoring equals local rescoring with one round per shard per batch") {
  const auto &t = fixture();
  for (uint64_t seed : {1, 2, 3}) {
    Lattice lat = test_lattice(t, seed);
    Lattice expect = rescore(lat, *t.model, "lm", 3);
    for (std::size_t s : {1, 5}) {
      ShardedClient client = connect_in_process(t.vocab, shard_model(*t.model, s));
      std::vector<std::size_t> before(s);
      for (std::size_t i = 0; i < s; ++i) before[i] = client.transport(i).rounds();
      std::size_t batches = 0;
      Lattice got = rescore_batched(lat, client.vocab(), 3, "lm", [&](const std::vector<LmQuery> &qs) {
        ++batches;
        return client.batch_lookup(qs);
      });
      CHECK(got == expect);
      for (std::size_t i = 0; i < s; ++i) CHECK(client.transport(i).rounds() - before[i] <= batches);
      CHECK(rescore_remote(lat, client, "lm", 3) == expect);
    }
  }
}

TEST_CASE("a dead in-process shard fails the whole rescore") {
  const auto &t = fixture();
  ShardedModel sm = shard_model(*t.model, 2);
  std::vector<std::unique_ptr<ShardTransport>> ts;
  std::vector<InProcessTransport *> raw;
  for (const auto &s : sm.shards) {
    auto p = std::make_unique<InProcessTransport>(s);
    raw.push_back(p.get());
    ts.push_back(std::move(p));
  }
  ShardedClient client(t.vocab, std::move(ts));
  raw[0]->set_available(false);
  CHECK_THROWS_AS(rescore_remote(test_lattice(t, 5), client, "lm", 3), Error);
  CHECK_THROWS_AS(rescore_remote(Lattice(), client, "lm", 3), Error);
}
