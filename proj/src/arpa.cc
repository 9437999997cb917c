#include "lmkit/arpa.hh"

#include <istream>
#include <ostream>

#include "lmkit/error.hh"
#include "lmkit/io.hh"

namespace lmkit {

void write_arpa(const BackoffModel &model, std::ostream &out) {
  const Vocabulary &vocab = model.vocab();
  out << "\\data\\\n";
  for (int n = 1; n <= model.order(); ++n) out << "ngram " << n << '=' << model.size(n) << '\n';
  for (int n = 1; n <= model.order(); ++n) {
    out << "\n\\" << n << "-grams:\n";
    const BackoffModel::Level &level = model.level(n);
    std::string line;
    for (std::size_t i = 0; i < level.keys.size(); ++i) {
      line = format_g7(level.logprob[i]);
      line += '\t';
      std::span<const WordId> key = level.keys.key(i);
      for (std::size_t j = 0; j < key.size(); ++j) {
        if (j) line += ' ';
        line += vocab.word(key[j]);
      }
      if (!level.backoff.empty()) {
        line += '\t';
        line += format_g7(level.backoff[i]);
      }
      line += '\n';
      out << line;
    }
  }
  out << "\n\\end\\\n";
}

void write_arpa_file(const BackoffModel &model, const std::string &path) {
  std::ofstream out = open_output(path);
  write_arpa(model, out);
  finish_output(out, path);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

class LineReader {
 public:
  explicit LineReader(std::istream &in) : in_(in) {}

  bool next(std::string &line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    return true;
  }
  std::size_t line_no() const { return line_no_; }

  [[noreturn]] void fail(ErrorCode code, const std::string &what) const {
    throw Error(code, "ARPA line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream &in_;
  std::size_t line_no_ = 0;
};

}  // namespace

BackoffModel read_arpa(std::istream &in) {
  LineReader reader(in);
  std::string line;

  bool found_data = false;
  while (reader.next(line)) {
    if (trim(line) == "\\data\\") {
      found_data = true;
      break;
    }
  }
  if (!found_data) reader.fail(ErrorCode::kMissingSection, "no \\data\\ section");

  std::vector<std::size_t> declared;
  bool pending = false;  // `line` already holds an unconsumed line
  while (reader.next(line)) {
    std::string_view t = trim(line);
    if (t.empty()) {
      if (declared.empty()) continue;
      break;
    }
    if (t.substr(0, 6) != "ngram ") {
      pending = true;
      break;
    }
    auto eq = t.find('=');
    if (eq == std::string_view::npos) reader.fail(ErrorCode::kParseError, "expected 'ngram k=COUNT'");
    long k = parse_int(trim(t.substr(6, eq - 6)), reader.line_no());
    Count count = parse_count(trim(t.substr(eq + 1)), reader.line_no());
    if (k != static_cast<long>(declared.size()) + 1) reader.fail(ErrorCode::kParseError, "ngram orders must be listed 1, 2, ...");
    declared.push_back(count);
  }
  if (declared.empty()) reader.fail(ErrorCode::kMissingSection, "\\data\\ declares no n-gram orders");
  const int order = static_cast<int>(declared.size());

  // Next non-blank line, or nullopt at end of input.
  auto next_content = [&]() -> std::optional<std::string_view> {
    while (true) {
      if (pending) {
        pending = false;
      } else if (!reader.next(line)) {
        return std::nullopt;
      }
      std::string_view t = trim(line);
      if (!t.empty()) return t;
    }
  };

  std::shared_ptr<const Vocabulary> vocab;
  std::vector<BackoffModel::Level> levels(order);
  for (int n = 1; n <= order; ++n) {
    const std::string header = "\\" + std::to_string(n) + "-grams:";
    auto t = next_content();
    if (!t || *t != header) reader.fail(ErrorCode::kMissingSection, "missing " + header);

    std::vector<WordId> ids;
    std::vector<double> logprob, backoff;
    std::vector<std::string> unigram_words;
    std::size_t seen = 0;
    while (reader.next(line)) {
      std::string_view entry = trim(line);
      if (entry.empty() || entry.front() == '\\') {
        pending = !entry.empty();
        break;
      }
      std::vector<std::string_view> f = fields_of(entry);
      bool has_backoff = f.size() == static_cast<std::size_t>(n) + 2;
      if (f.size() != static_cast<std::size_t>(n) + 1 && !has_backoff) {
        reader.fail(ErrorCode::kParseError, "expected " + std::to_string(n) + " words");
      }
      if (has_backoff && n == order) reader.fail(ErrorCode::kParseError, "highest order entries carry no backoff");
      logprob.push_back(parse_double(f[0], reader.line_no()));
      backoff.push_back(has_backoff ? parse_double(f[n + 1], reader.line_no()) : 0.0);
      if (n == 1) {
        unigram_words.emplace_back(f[1]);
      } else {
        for (int j = 1; j <= n; ++j) {
          auto id = vocab->find(f[j]);
          if (!id) reader.fail(ErrorCode::kParseError, "word '" + std::string(f[j]) + "' has no unigram entry");
          ids.push_back(*id);
        }
      }
      ++seen;
    }
    if (seen != declared[n - 1]) {
      reader.fail(ErrorCode::kCountMismatch, "\\data\\ declares " + std::to_string(declared[n - 1]) + " " +
                                                 std::to_string(n) + "-grams but the section lists " +
                                                 std::to_string(seen));
    }
    if (n == 1) {
      std::vector<std::string> words = {std::string(kBos), std::string(kEos), std::string(kUnk)};
      std::vector<bool> present(kReservedCount, false);
      for (const std::string &w : unigram_words) {
        if (w == kBos) present[kBosId] = true;
        else if (w == kEos) present[kEosId] = true;
        else if (w == kUnk) present[kUnkId] = true;
        else words.push_back(w);
      }
      for (std::size_t r = 0; r < kReservedCount; ++r) {
        if (!present[r]) reader.fail(ErrorCode::kParseError, "unigram section lacks " + words[r]);
      }
      try {
        vocab = std::make_shared<const Vocabulary>(Vocabulary::from_words(words));
      } catch (const Error &e) {
        reader.fail(ErrorCode::kParseError, e.what());
      }
      for (const std::string &w : unigram_words) ids.push_back(*vocab->find(w));
    }

    std::vector<std::size_t> perm = sort_order(ids, n);
    BackoffModel::Level &level = levels[n - 1];
    level.keys = NgramIndex(n);
    level.keys.reserve(perm.size());
    for (std::size_t p : perm) {
      std::span<const WordId> key(ids.data() + p * n, static_cast<std::size_t>(n));
      if (!level.keys.empty() && !key_less(level.keys.key(level.keys.size() - 1), key)) {
        reader.fail(ErrorCode::kParseError, "duplicate " + std::to_string(n) + "-gram entry");
      }
      level.keys.push_back(key);
      level.logprob.push_back(logprob[p]);
      if (n < order) level.backoff.push_back(backoff[p]);
    }
  }

  auto t = next_content();
  if (!t) reader.fail(ErrorCode::kMissingSection, "missing \\end\\");
  if (*t != "\\end\\") reader.fail(ErrorCode::kParseError, "unexpected content before \\end\\");

  try {
    return BackoffModel(std::move(vocab), std::move(levels));
  } catch (const Error &e) {
    throw Error(ErrorCode::kParseError, std::string("ARPA model invalid: ") + e.what());
  }
}

BackoffModel read_arpa_file(const std::string &path) {
  std::ifstream in = open_input(path);
  return read_arpa(in);
}

}  // namespace lmkit
