#include "lmkit/serve.hh"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "lmkit/error.hh"
#include "lmkit/io.hh"
#include "lmkit/vocab.hh"

namespace lmkit {

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t shard_of(WordId first, std::size_t shard_count) {
  return static_cast<std::size_t>(mix64(first) % shard_count);
}

namespace {

class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
  void bytes(std::string_view s) { buf_.append(s); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(data_[pos_++]);
  }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(u8()) << (8 * i);
    return v;
  }
  uint64_t u64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view rest() {
    std::string_view r = data_.substr(pos_);
    pos_ = data_.size();
    return r;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(ErrorCode::kParseError, "truncated binary data");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

constexpr char kShardMagic[8] = {'L', 'M', 'K', 'S', 'H', 'R', 'D', '1'};

}  // namespace

ShardStore::ShardStore(uint32_t index, uint32_t shard_count, int order, uint32_t vocab_size, std::vector<Level> levels)
    : index_(index), shard_count_(shard_count), vocab_size_(vocab_size), levels_(std::move(levels)) {
  if (shard_count == 0 || index >= shard_count) throw Error(ErrorCode::kBadArgument, "shard index outside shard count");
  if (order < 1 || levels_.size() != static_cast<std::size_t>(order)) {
    throw Error(ErrorCode::kBadOrder, "shard levels do not match order " + std::to_string(order));
  }
  for (std::size_t n = 0; n < levels_.size(); ++n) {
    const Level &l = levels_[n];
    if (l.keys.length() != static_cast<int>(n + 1) || l.logprob.size() != l.keys.size() ||
        l.backoff.size() != l.keys.size() || !l.keys.is_sorted_unique()) {
      throw Error(ErrorCode::kParseError, "malformed shard level " + std::to_string(n + 1));
    }
    for (std::size_t i = 0; i < l.keys.size(); ++i) {
      for (WordId id : l.keys.key(i)) {
        if (id >= vocab_size) throw Error(ErrorCode::kVocabMismatch, "shard entry id outside vocabulary");
      }
      if (shard_of(l.keys.key(i)[0], shard_count) != index) {
        throw Error(ErrorCode::kParseError, "shard entry belongs to another shard");
      }
    }
  }
}

uint64_t ShardStore::entry_count() const {
  uint64_t n = 0;
  for (const Level &l : levels_) n += l.keys.size();
  return n;
}

std::optional<EntryValues> ShardStore::find(std::span<const WordId> ngram) const {
  if (ngram.empty() || ngram.size() > levels_.size()) return std::nullopt;
  const Level &l = levels_[ngram.size() - 1];
  auto i = l.keys.find(ngram);
  if (!i) return std::nullopt;
  return EntryValues{l.logprob[*i], l.backoff[*i]};
}

bool ShardStore::operator==(const ShardStore &other) const {
  if (index_ != other.index_ || shard_count_ != other.shard_count_ || vocab_size_ != other.vocab_size_ ||
      levels_.size() != other.levels_.size()) {
    return false;
  }
  for (std::size_t n = 0; n < levels_.size(); ++n) {
    const Level &a = levels_[n], &b = other.levels_[n];
    if (a.keys.data() != b.keys.data() || a.logprob != b.logprob || a.backoff != b.backoff) return false;
  }
  return true;
}

ShardedModel shard_model(const BackoffModel &model, std::size_t shard_count) {
  if (shard_count < 1) throw Error(ErrorCode::kBadArgument, "shard count must be >= 1");
  const int order = model.order();
  std::vector<std::vector<ShardStore::Level>> parts(shard_count, std::vector<ShardStore::Level>(order));
  for (auto &levels : parts) {
    for (int n = 1; n <= order; ++n) levels[n - 1].keys = NgramIndex(n);
  }
  for (int n = 1; n <= order; ++n) {
    const BackoffModel::Level &src = model.level(n);
    for (std::size_t i = 0; i < src.keys.size(); ++i) {
      std::span<const WordId> key = src.keys.key(i);
      ShardStore::Level &dst = parts[shard_of(key[0], shard_count)][n - 1];
      dst.keys.push_back(key);
      dst.logprob.push_back(src.logprob[i]);
      dst.backoff.push_back(src.backoff.empty() ? 0.0 : src.backoff[i]);
    }
  }
  ShardedModel out;
  out.plan.shard_count = shard_count;
  const auto vocab_size = static_cast<uint32_t>(model.vocab().size());
  for (std::size_t s = 0; s < shard_count; ++s) {
    auto store = std::make_shared<const ShardStore>(static_cast<uint32_t>(s), static_cast<uint32_t>(shard_count), order,
                                                    vocab_size, std::move(parts[s]));
    out.plan.entry_counts.push_back(store->entry_count());
    out.shards.push_back(std::move(store));
  }
  return out;
}

void write_shard(const ShardStore &store, std::ostream &out) {
  ByteWriter w;
  w.bytes(std::string_view(kShardMagic, sizeof kShardMagic));
  w.u32(static_cast<uint32_t>(store.order()));
  w.u32(store.vocab_size());
  w.u32(store.index());
  w.u32(store.shard_count());
  w.u64(store.entry_count());
  for (int n = 1; n <= store.order(); ++n) {
    const ShardStore::Level &l = store.level(n);
    for (std::size_t i = 0; i < l.keys.size(); ++i) {
      w.u8(static_cast<uint8_t>(n));
      for (WordId id : l.keys.key(i)) w.u32(id);
      w.f64(l.logprob[i]);
      w.f64(l.backoff[i]);
    }
  }
  std::string bytes = w.take();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ShardStore read_shard(std::istream &in) {
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(data);
  for (char c : kShardMagic) {
    if (static_cast<char>(r.u8()) != c) throw Error(ErrorCode::kParseError, "not a shard file");
  }
  uint32_t order = r.u32(), vocab_size = r.u32(), index = r.u32(), count = r.u32();
  uint64_t entries = r.u64();
  if (order < 1 || order > 255) throw Error(ErrorCode::kParseError, "bad shard order");
  std::vector<ShardStore::Level> levels(order);
  for (uint32_t n = 1; n <= order; ++n) levels[n - 1].keys = NgramIndex(static_cast<int>(n));
  std::vector<WordId> key;
  for (uint64_t e = 0; e < entries; ++e) {
    uint8_t len = r.u8();
    if (len < 1 || len > order) throw Error(ErrorCode::kParseError, "bad shard entry length");
    key.resize(len);
    for (WordId &id : key) id = r.u32();
    ShardStore::Level &l = levels[len - 1];
    l.keys.push_back(key);
    l.logprob.push_back(r.f64());
    l.backoff.push_back(r.f64());
  }
  if (!r.done()) throw Error(ErrorCode::kParseError, "trailing bytes in shard file");
  return ShardStore(index, count, static_cast<int>(order), vocab_size, std::move(levels));
}

void write_shard_file(const ShardStore &store, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  write_shard(store, out);
  finish_output(out, path);
}

ShardStore read_shard_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read '" + path + "'");
  return read_shard(in);
}

std::string encode_frame(const Frame &frame) {
  ByteWriter w;
  w.u32(static_cast<uint32_t>(frame.payload.size() + 1));
  w.u8(static_cast<uint8_t>(frame.type));
  w.bytes(frame.payload);
  return w.take();
}

Frame make_hello() {
  ByteWriter w;
  w.u8(kProtocolVersion);
  return Frame{MessageType::kHello, w.take()};
}

Frame make_health() { return Frame{MessageType::kHealth, {}}; }

Frame make_lookup(const std::vector<std::vector<WordId>> &keys) {
  ByteWriter w;
  w.u32(static_cast<uint32_t>(keys.size()));
  for (const auto &k : keys) {
    w.u8(static_cast<uint8_t>(k.size()));
    for (WordId id : k) w.u32(id);
  }
  return Frame{MessageType::kLookup, w.take()};
}

namespace {

void expect_type(const Frame &frame, MessageType type) {
  if (frame.type == MessageType::kError) throw Error(ErrorCode::kShardUnavailable, "shard replied: " + frame.payload);
  if (frame.type != type) throw Error(ErrorCode::kShardUnavailable, "unexpected reply type");
}

Frame error_frame(const std::string &message) { return Frame{MessageType::kError, message}; }

}  // namespace

ShardInfo parse_hello_reply(const Frame &frame) {
  expect_type(frame, MessageType::kHelloReply);
  ByteReader r(frame.payload);
  ShardInfo info;
  info.version = r.u8();
  info.index = r.u32();
  info.shard_count = r.u32();
  info.order = r.u32();
  info.vocab_size = r.u32();
  info.entry_count = r.u64();
  return info;
}

uint64_t parse_health_reply(const Frame &frame) {
  expect_type(frame, MessageType::kHealthReply);
  ByteReader r(frame.payload);
  return r.u64();
}

std::vector<std::optional<EntryValues>> parse_lookup_reply(const Frame &frame, std::size_t expected) {
  expect_type(frame, MessageType::kLookupReply);
  ByteReader r(frame.payload);
  std::vector<std::optional<EntryValues>> out;
  out.reserve(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    uint8_t found = r.u8();
    double lp = r.f64(), bo = r.f64();
    if (found) out.push_back(EntryValues{lp, bo}); else out.push_back(std::nullopt);
  }
  if (!r.done()) throw Error(ErrorCode::kShardUnavailable, "lookup reply has trailing bytes");
  return out;
}

Frame handle_request(const ShardStore &store, const Frame &request) {
  try {
    ByteReader r(request.payload);
    ByteWriter w;
    switch (request.type) {
      case MessageType::kHello: {
        uint8_t version = r.u8();
        if (version != kProtocolVersion) return error_frame("unsupported protocol version " + std::to_string(version));
        w.u8(kProtocolVersion);
        w.u32(store.index());
        w.u32(store.shard_count());
        w.u32(static_cast<uint32_t>(store.order()));
        w.u32(store.vocab_size());
        w.u64(store.entry_count());
        return Frame{MessageType::kHelloReply, w.take()};
      }
      case MessageType::kHealth:
        if (!r.done()) return error_frame("health request carries a payload");
        w.u64(store.entry_count());
        return Frame{MessageType::kHealthReply, w.take()};
      case MessageType::kLookup: {
        uint32_t n = r.u32();
        std::vector<WordId> key;
        for (uint32_t q = 0; q < n; ++q) {
          key.resize(r.u8());
          for (WordId &id : key) id = r.u32();
          auto hit = store.find(key);
          w.u8(hit ? 1 : 0);
          w.f64(hit ? hit->logprob : 0.0);
          w.f64(hit ? hit->backoff : 0.0);
        }
        if (!r.done()) return error_frame("lookup request has trailing bytes");
        return Frame{MessageType::kLookupReply, w.take()};
      }
      default:
        return error_frame("unknown message type");
    }
  } catch (const std::exception &e) {
    return error_frame(e.what());
  }
}

Frame ShardTransport::roundtrip(const Frame &request) {
  ++rounds_;
  return exchange(request);
}

Frame InProcessTransport::exchange(const Frame &request) {
  if (!available_) throw Error(ErrorCode::kShardUnavailable, "shard " + std::to_string(store_->index()) + " is down");
  std::string wire = encode_frame(request);
  ByteReader r(wire);
  uint32_t len = r.u32();
  Frame decoded{static_cast<MessageType>(r.u8()), std::string(r.rest())};
  if (len != decoded.payload.size() + 1) throw Error(ErrorCode::kShardUnavailable, "frame length mismatch");
  Frame reply = handle_request(*store_, decoded);
  std::string back = encode_frame(reply);
  ByteReader rb(back);
  rb.u32();
  return Frame{static_cast<MessageType>(rb.u8()), std::string(rb.rest())};
}

Endpoint parse_endpoint(const std::string &text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) throw Error(ErrorCode::kBadArgument, "expected host:port, got '" + text + "'");
  long port = 0;
  try {
    port = parse_int(std::string_view(text).substr(colon + 1), 0);
  } catch (const Error &) {
    throw Error(ErrorCode::kBadArgument, "bad port in '" + text + "'");
  }
  if (port < 0 || port > 65535) throw Error(ErrorCode::kBadArgument, "port out of range in '" + text + "'");
  return Endpoint{text.substr(0, colon), static_cast<uint16_t>(port)};
}

namespace {

bool send_all(int fd, const std::string &bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    ssize_t k = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (k < 0 && errno == EINTR) continue;
    if (k <= 0) return false;
    sent += static_cast<std::size_t>(k);
  }
  return true;
}

bool recv_all(int fd, char *buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    ssize_t k = ::recv(fd, buf + got, n - got, 0);
    if (k < 0 && errno == EINTR) continue;
    if (k <= 0) return false;
    got += static_cast<std::size_t>(k);
  }
  return true;
}

std::optional<Frame> read_frame(int fd) {
  char head[4];
  if (!recv_all(fd, head, 4)) return std::nullopt;
  uint32_t len = ByteReader(std::string_view(head, 4)).u32();
  if (len < 1 || len > kMaxFrameBytes) return std::nullopt;
  std::string body(len, '\0');
  if (!recv_all(fd, body.data(), len)) return std::nullopt;
  return Frame{static_cast<MessageType>(static_cast<uint8_t>(body[0])), body.substr(1)};
}

addrinfo *resolve(const Endpoint &ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo *res = nullptr;
  std::string port = std::to_string(ep.port);
  if (::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res) != 0) return nullptr;
  return res;
}

}  // namespace

TcpTransport::~TcpTransport() { close_socket(); }

void TcpTransport::close_socket() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

Frame TcpTransport::exchange(const Frame &request) {
  auto fail = [this](const std::string &what) -> Error {
    close_socket();
    return Error(ErrorCode::kShardUnavailable, endpoint_.str() + ": " + what);
  };
  if (fd_ < 0) {
    addrinfo *res = resolve(endpoint_, false);
    if (!res) throw fail("cannot resolve host");
    for (addrinfo *a = res; a && fd_ < 0; a = a->ai_next) {
      int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        fd_ = fd;
      } else {
        ::close(fd);
      }
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw fail("connection refused");
  }
  if (!send_all(fd_, encode_frame(request))) throw fail("send failed");
  std::optional<Frame> reply = read_frame(fd_);
  if (!reply) throw fail("connection closed");
  return *reply;
}

ShardServer::ShardServer(std::shared_ptr<const ShardStore> store, const Endpoint &bind) : store_(std::move(store)) {
  addrinfo *res = resolve(bind, true);
  if (!res) throw Error(ErrorCode::kBindFailure, "cannot resolve bind address " + bind.str());
  std::string last_error = "no usable address";
  for (addrinfo *a = res; a && listen_fd_ < 0; a = a->ai_next) {
    int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      listen_fd_ = fd;
    } else {
      last_error = std::strerror(errno);
      ::close(fd);
    }
  }
  ::freeaddrinfo(res);
  if (listen_fd_ < 0) throw Error(ErrorCode::kBindFailure, "cannot bind " + bind.str() + ": " + last_error);

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr *>(&addr), &len);
  endpoint_.host = bind.host;
  if (addr.ss_family == AF_INET) {
    endpoint_.port = ntohs(reinterpret_cast<sockaddr_in *>(&addr)->sin_port);
  } else {
    endpoint_.port = ntohs(reinterpret_cast<sockaddr_in6 *>(&addr)->sin6_port);
  }
  acceptor_ = std::thread([this] { accept_loop(); });
}

ShardServer::~ShardServer() { stop(); }

void ShardServer::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    int k = ::poll(&p, 1, 50);
    if (k <= 0 || stopping_) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard<std::mutex> lock(mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    connections_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void ShardServer::serve_connection(int fd) {
  while (true) {
    std::optional<Frame> request = read_frame(fd);
    if (!request) break;
    if (!send_all(fd, encode_frame(handle_request(*store_, *request)))) break;
  }
  std::lock_guard<std::mutex> lock(mutex_);
  connections_.erase(std::find(connections_.begin(), connections_.end(), fd));
  ::close(fd);
}

void ShardServer::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (int fd : connections_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (std::thread &t : workers) t.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

std::unique_ptr<ShardServer> serve_shard(std::shared_ptr<const ShardStore> store, const Endpoint &bind) {
  return std::make_unique<ShardServer>(std::move(store), bind);
}

std::vector<Endpoint> read_shard_manifest(std::istream &in) {
  std::map<std::size_t, Endpoint> by_index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    Sentence f = split_words(line);
    if (f.empty() || f[0][0] == '#') continue;
    if (f.size() != 2) throw Error(ErrorCode::kParseError, "manifest line " + std::to_string(line_no) + ": expected 'index<TAB>host:port'");
    std::size_t index = static_cast<std::size_t>(parse_count(f[0], line_no));
    if (!by_index.emplace(index, parse_endpoint(f[1])).second) {
      throw Error(ErrorCode::kParseError, "manifest line " + std::to_string(line_no) + ": shard " + f[0] + " listed twice");
    }
  }
  std::vector<Endpoint> out;
  for (auto &[index, ep] : by_index) {
    if (index != out.size()) throw Error(ErrorCode::kParseError, "manifest is missing shard " + std::to_string(out.size()));
    out.push_back(ep);
  }
  if (out.empty()) throw Error(ErrorCode::kParseError, "manifest lists no shards");
  return out;
}

std::vector<Endpoint> read_shard_manifest_file(const std::string &path) {
  std::ifstream in = open_input(path);
  return read_shard_manifest(in);
}

ShardedClient::ShardedClient(std::shared_ptr<const Vocabulary> vocab, std::vector<std::unique_ptr<ShardTransport>> transports)
    : vocab_(std::move(vocab)), transports_(std::move(transports)) {
  if (transports_.empty()) throw Error(ErrorCode::kBadArgument, "client needs at least one shard");
  for (std::size_t s = 0; s < transports_.size(); ++s) {
    ShardInfo info = parse_hello_reply(transports_[s]->roundtrip(make_hello()));
    if (info.version != kProtocolVersion) throw Error(ErrorCode::kShardUnavailable, "shard speaks another protocol version");
    if (info.index != s || info.shard_count != transports_.size()) {
      throw Error(ErrorCode::kBadArgument, "endpoint " + std::to_string(s) + " serves shard " + std::to_string(info.index) +
                                               " of " + std::to_string(info.shard_count));
    }
    if (info.vocab_size != vocab_->size()) {
      throw Error(ErrorCode::kVocabMismatch, "shard vocabulary has " + std::to_string(info.vocab_size) + " words, client has " +
                                                 std::to_string(vocab_->size()));
    }
    if (s == 0) {
      order_ = static_cast<int>(info.order);
    } else if (order_ != static_cast<int>(info.order)) {
      throw Error(ErrorCode::kOrderMismatch, "shards disagree on model order");
    }
  }
}

uint64_t ShardedClient::entry_count(std::size_t shard) {
  return parse_health_reply(transports_.at(shard)->roundtrip(make_health()));
}

std::vector<double> ShardedClient::batch_lookup(const std::vector<LmQuery> &batch) {
  if (batch.empty()) return {};
  const std::size_t vocab_size = vocab_->size();
  const std::size_t shards = transports_.size();
  const std::size_t keep = static_cast<std::size_t>(order_ - 1);
  for (const LmQuery &q : batch) {
    bool ok = q.word < vocab_size;
    for (WordId id : last_ids(q.history, keep)) ok = ok && id < vocab_size;
    if (!ok) throw Error(ErrorCode::kVocabMismatch, "query id outside vocabulary");
  }

  // Every entry the backoff recursion may touch, grouped by shard.
  std::vector<std::map<std::vector<WordId>, std::size_t>> wanted(shards);
  std::vector<WordId> full;
  for (const LmQuery &q : batch) {
    std::span<const WordId> ctx = last_ids(q.history, keep);
    full.assign(ctx.begin(), ctx.end());
    full.push_back(q.word);
    for (std::size_t start = 0; start < full.size(); ++start) {
      std::vector<WordId> ngram(full.begin() + start, full.end());
      auto &m = wanted[shard_of(ngram[0], shards)];
      m.emplace(std::move(ngram), m.size());
      if (start + 1 < full.size()) {
        std::vector<WordId> hist(full.begin() + start, full.end() - 1);
        auto &h = wanted[shard_of(hist[0], shards)];
        h.emplace(std::move(hist), h.size());
      }
    }
  }

  std::vector<std::vector<std::optional<EntryValues>>> answers(shards);
  for (std::size_t s = 0; s < shards; ++s) {
    if (wanted[s].empty()) continue;
    std::vector<std::vector<WordId>> keys(wanted[s].size());
    for (const auto &[k, i] : wanted[s]) keys[i] = k;
    answers[s] = parse_lookup_reply(transports_[s]->roundtrip(make_lookup(keys)), keys.size());
  }

  std::vector<double> out;
  out.reserve(batch.size());
  std::vector<WordId> probe;
  auto lookup = [&](std::span<const WordId> key) -> std::optional<EntryValues> {
    std::size_t s = shard_of(key[0], shards);
    probe.assign(key.begin(), key.end());
    auto it = wanted[s].find(probe);
    if (it == wanted[s].end()) return std::nullopt;
    return answers[s][it->second];
  };
  for (const LmQuery &q : batch) out.push_back(compose_backoff(last_ids(q.history, keep), q.word, lookup));
  return out;
}

ShardedClient connect_in_process(std::shared_ptr<const Vocabulary> vocab, const ShardedModel &sharded) {
  std::vector<std::unique_ptr<ShardTransport>> transports;
  for (const auto &store : sharded.shards) transports.push_back(std::make_unique<InProcessTransport>(store));
  return ShardedClient(std::move(vocab), std::move(transports));
}

ShardedClient connect_tcp(std::shared_ptr<const Vocabulary> vocab, const std::vector<Endpoint> &endpoints) {
  std::vector<std::unique_ptr<ShardTransport>> transports;
  for (const Endpoint &ep : endpoints) transports.push_back(std::make_unique<TcpTransport>(ep));
  return ShardedClient(std::move(vocab), std::move(transports));
}

Lattice rescore_remote(const Lattice &lattice, ShardedClient &client, const std::string &lm_label, int order) {
  return rescore_batched(lattice, client.vocab(), order, lm_label,
                         [&client](const std::vector<LmQuery> &queries) { return client.batch_lookup(queries); });
}

}  // namespace lmkit
