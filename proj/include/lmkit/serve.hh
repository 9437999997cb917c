#ifndef LMKIT_SERVE_HH
#define LMKIT_SERVE_HH

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "lmkit/lattice.hh"
#include "lmkit/model.hh"
#include "lmkit/ngram_index.hh"

namespace lmkit {

// One splitmix64 step; fixed so shard assignment is the same on every platform.
uint64_t mix64(uint64_t x);

// Shard holding every n-gram whose first word is `first`.
std::size_t shard_of(WordId first, std::size_t shard_count);

// Exact entries of one shard, grouped by n-gram length.
class ShardStore {
 public:
  struct Level {
    NgramIndex keys;
    std::vector<double> logprob;
    std::vector<double> backoff;
  };

  ShardStore() = default;
  ShardStore(uint32_t index, uint32_t shard_count, int order, uint32_t vocab_size, std::vector<Level> levels);

  uint32_t index() const { return index_; }
  uint32_t shard_count() const { return shard_count_; }
  int order() const { return static_cast<int>(levels_.size()); }
  uint32_t vocab_size() const { return vocab_size_; }
  uint64_t entry_count() const;
  const Level &level(int n) const { return levels_.at(n - 1); }

  std::optional<EntryValues> find(std::span<const WordId> ngram) const;

  bool operator==(const ShardStore &other) const;

 private:
  uint32_t index_ = 0;
  uint32_t shard_count_ = 1;
  uint32_t vocab_size_ = 0;
  std::vector<Level> levels_;
};

struct ShardPlan {
  std::size_t shard_count = 1;
  std::vector<std::size_t> entry_counts;  // per shard

  std::size_t shard_for(std::span<const WordId> ngram) const { return shard_of(ngram.front(), shard_count); }
};

struct ShardedModel {
  ShardPlan plan;
  std::vector<std::shared_ptr<const ShardStore>> shards;
};

// Partitions every entry of `model` by the hash of its first word.
ShardedModel shard_model(const BackoffModel &model, std::size_t shard_count);

// Binary shard file: magic "LMKSHRD1", u32 order, u32 vocab size, u32 shard
// index, u32 shard count, u64 entry count, then per entry u8 length, u32 ids,
// f64 logprob, f64 backoff.  Little-endian throughout.
void write_shard(const ShardStore &store, std::ostream &out);
ShardStore read_shard(std::istream &in);
void write_shard_file(const ShardStore &store, const std::string &path);
ShardStore read_shard_file(const std::string &path);

// Wire protocol.  Every frame is u32 length (type byte + payload), u8 type,
// payload.  Integers are little-endian, floats are IEEE-754 binary64.
//   HELLO   u8 version             -> HELLO_REPLY u8 version, u32 index, u32 count,
//                                     u32 order, u32 vocab size, u64 entries
//   HEALTH  (empty)                -> HEALTH_REPLY u64 entries
//   LOOKUP  u32 n, n x (u8 len, len x u32 id)
//                                  -> LOOKUP_REPLY n x (u8 found, f64 logprob, f64 backoff)
//   any failure                    -> ERROR utf-8 message
enum class MessageType : uint8_t {
  kHello = 0x01,
  kHealth = 0x02,
  kLookup = 0x03,
  kHelloReply = 0x81,
  kHealthReply = 0x82,
  kLookupReply = 0x83,
  kError = 0x7f,
};

constexpr uint8_t kProtocolVersion = 1;
constexpr uint32_t kMaxFrameBytes = 1u << 28;

struct Frame {
  MessageType type = MessageType::kError;
  std::string payload;
};

std::string encode_frame(const Frame &frame);

struct ShardInfo {
  uint8_t version = kProtocolVersion;
  uint32_t index = 0, shard_count = 0, order = 0, vocab_size = 0;
  uint64_t entry_count = 0;
};

Frame make_hello();
Frame make_health();
Frame make_lookup(const std::vector<std::vector<WordId>> &keys);
ShardInfo parse_hello_reply(const Frame &frame);
uint64_t parse_health_reply(const Frame &frame);
std::vector<std::optional<EntryValues>> parse_lookup_reply(const Frame &frame, std::size_t expected);

// Server-side handling of one request; never throws.
Frame handle_request(const ShardStore &store, const Frame &request);

// One request/response exchange with a shard.  Failures throw ShardUnavailable.
class ShardTransport {
 public:
  virtual ~ShardTransport() = default;
  Frame roundtrip(const Frame &request);
  std::size_t rounds() const { return rounds_; }

 protected:
  virtual Frame exchange(const Frame &request) = 0;

 private:
  std::size_t rounds_ = 0;
};

// Calls the server logic directly.  Frames are still encoded and decoded so
// the wire format is exercised.
class InProcessTransport final : public ShardTransport {
 public:
  explicit InProcessTransport(std::shared_ptr<const ShardStore> store) : store_(std::move(store)) {}
  // Simulates a dead shard: further exchanges throw ShardUnavailable.
  void set_available(bool available) { available_ = available; }

 protected:
  Frame exchange(const Frame &request) override;

 private:
  std::shared_ptr<const ShardStore> store_;
  bool available_ = true;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
};

// "host:port"; throws BadArgument.
Endpoint parse_endpoint(const std::string &text);

// Persistent TCP connection, opened on first use.
class TcpTransport final : public ShardTransport {
 public:
  explicit TcpTransport(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
  ~TcpTransport() override;
  TcpTransport(const TcpTransport &) = delete;
  TcpTransport &operator=(const TcpTransport &) = delete;

 protected:
  Frame exchange(const Frame &request) override;

 private:
  void close_socket();

  Endpoint endpoint_;
  int fd_ = -1;
};

// TCP server answering requests for one shard, one thread per connection.
class ShardServer {
 public:
  ShardServer(std::shared_ptr<const ShardStore> store, const Endpoint &bind);  // throws BindFailure
  ~ShardServer();
  ShardServer(const ShardServer &) = delete;
  ShardServer &operator=(const ShardServer &) = delete;

  // Bound address; the port is resolved when 0 was requested.
  const Endpoint &endpoint() const { return endpoint_; }
  // Stops accepting, closes open connections and joins every thread.
  void stop();

 private:
  void accept_loop();
  void serve_connection(int fd);

  std::shared_ptr<const ShardStore> store_;
  Endpoint endpoint_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mutex_;
  std::vector<int> connections_;
  std::vector<std::thread> workers_;
};

std::unique_ptr<ShardServer> serve_shard(std::shared_ptr<const ShardStore> store, const Endpoint &bind);

// `index<TAB>host:port` lines; every index 0..S-1 exactly once.
std::vector<Endpoint> read_shard_manifest(std::istream &in);
std::vector<Endpoint> read_shard_manifest_file(const std::string &path);

// Client view of a sharded model.  Checks every shard with a handshake, then
// answers batches with one LOOKUP round per contacted shard and composes
// probabilities locally.
class ShardedClient {
 public:
  ShardedClient(std::shared_ptr<const Vocabulary> vocab, std::vector<std::unique_ptr<ShardTransport>> transports);

  int order() const { return order_; }
  const Vocabulary &vocab() const { return *vocab_; }
  std::size_t shard_count() const { return transports_.size(); }
  const ShardTransport &transport(std::size_t shard) const { return *transports_.at(shard); }
  uint64_t entry_count(std::size_t shard);  // HEALTH round

  // log10 probabilities, bit-identical to BackoffModel::log10_prob on the
  // unsharded model.  Throws VocabMismatch or ShardUnavailable; never returns
  // partial results.
  std::vector<double> batch_lookup(const std::vector<LmQuery> &batch);

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  std::vector<std::unique_ptr<ShardTransport>> transports_;
  int order_ = 0;
};

ShardedClient connect_in_process(std::shared_ptr<const Vocabulary> vocab, const ShardedModel &sharded);
ShardedClient connect_tcp(std::shared_ptr<const Vocabulary> vocab, const std::vector<Endpoint> &endpoints);

// rescore with probabilities fetched through the client.
Lattice rescore_remote(const Lattice &lattice, ShardedClient &client, const std::string &lm_label, int order);

}  // namespace lmkit

#endif  // LMKIT_SERVE_HH
