// lmkit command-line driver.
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lmkit/arpa.hh"
#include "lmkit/counts.hh"
#include "lmkit/error.hh"
#include "lmkit/eval.hh"
#include "lmkit/io.hh"
#include "lmkit/lattice.hh"
#include "lmkit/mixture.hh"
#include "lmkit/model.hh"
#include "lmkit/prune.hh"
#include "lmkit/serve.hh"
#include "lmkit/synth.hh"
#include "lmkit/tune.hh"
#include "lmkit/vocab.hh"

namespace fs = std::filesystem;
using namespace lmkit;

namespace {

constexpr const char *kDefaultBind = "127.0.0.1:7100";

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

DiscountConfig parse_discount(const std::string &text) {
  if (text == "auto") return DiscountConfig::auto_estimate();
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) v.push_back(parse_double(part, 0));
  if (v.size() == 1) return DiscountConfig::fixed(v[0]);
  if (v.size() == 3) return DiscountConfig{false, {Discounts{v[0], v[1], v[2]}}};
  throw Error(ErrorCode::kBadArgument, "--discount takes auto, D or D1,D2,D3");
}

// A weights file, or comma-separated values matched to `labels`.
WeightVector parse_weights(const std::string &text, const std::vector<std::string> &labels) {
  if (fs::exists(text)) return read_weights_file(text);
  WeightVector w;
  w.labels = labels;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) w.values.push_back(parse_double(part, 0));
  if (w.values.size() != labels.size()) {
    throw Error(ErrorCode::kLabelMismatch, "expected " + std::to_string(labels.size()) + " weights, got " +
                                               std::to_string(w.values.size()));
  }
  return w;
}

ComponentList load_models(const std::vector<std::string> &paths) {
  ComponentList models;
  for (const auto &p : paths) models.push_back(std::make_shared<const BackoffModel>(read_arpa_file(p)));
  return models;
}

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out = open_output(path);
  out << text;
  finish_output(out, path);
}

struct Options {
  // shared
  int order = 3;
  int context_order = 0;  // rescore: 0 means the model order
  std::size_t min_count = 1;
  std::optional<std::size_t> max_vocab;
  std::string discount = "auto";
  std::optional<double> threshold;
  std::optional<std::size_t> target_size;
  std::string weights;
  std::vector<std::string> labels;
  std::size_t nbest = 100;
  std::size_t decode_nbest = 1;
  std::size_t rounds = 10;
  uint64_t seed = 1;
  std::size_t shards = 1;
  std::string manifest;
  std::string bind;

  std::vector<std::string> inputs;
  std::vector<std::string> models;
  std::string text, vocab, counts, model, heldout, out, out_dir, weights_out, hyp, ref, shard;
  std::size_t restarts = 0;
  std::size_t sentences = 2000;
  std::size_t tune_items = 20;
  bool merge = false;
  bool no_eos = false;
  bool per_sentence = false;
};

int cmd_vocab(const Options &o) {
  std::vector<Sentence> corpus;
  for (const auto &path : o.inputs) {
    auto s = read_sentences_file(path);
    corpus.insert(corpus.end(), s.begin(), s.end());
  }
  Vocabulary v = build_vocab(corpus, o.max_vocab, o.min_count);
  write_vocab_file(v, o.out);
  std::cerr << "words=" << v.size() << " oov_rate=" << fixed6(oov_rate(v, corpus)) << "\n";
  return 0;
}

int cmd_count(const Options &o) {
  Vocabulary v = read_vocab_file(o.vocab);
  std::optional<CountTable> total;
  for (const auto &path : o.inputs) {
    CountTable t = o.merge ? read_counts_file(path, v)
                           : count_ngrams(map_corpus(v, read_sentences_file(path)), o.order);
    total = total ? merge_counts(*total, t) : std::move(t);
  }
  write_counts_file(*total, v, o.out);
  for (int n = 1; n <= total->order(); ++n) std::cerr << "order=" << n << " ngrams=" << total->size(n) << "\n";
  return 0;
}

int cmd_estimate(const Options &o) {
  auto v = std::make_shared<const Vocabulary>(read_vocab_file(o.vocab));
  CountTable raw = read_counts_file(o.counts, *v);
  CountTable adjusted = raw.order() > 1 ? adjust_counts_kn(raw) : raw;
  DiscountConfig config = parse_discount(o.discount);
  std::vector<Discounts> used = resolve_discounts(adjusted, config);
  BackoffModel m = estimate_kn(adjusted, v, config);
  write_arpa_file(m, o.out);
  for (int n = 1; n <= m.order(); ++n) {
    const Discounts &d = used[n - 1];
    std::cerr << "order=" << n << " entries=" << m.size(n) << " d1=" << format_g7(d.d1) << " d2=" << format_g7(d.d2)
              << " d3=" << format_g7(d.d3plus) << "\n";
  }
  return 0;
}

int cmd_prune(const Options &o) {
  BackoffModel m = read_arpa_file(o.model);
  std::optional<BackoffModel> pruned;
  double threshold = 0;
  if (o.target_size) {
    PruneToSizeResult r = prune_to_size(m, *o.target_size);
    threshold = r.threshold;
    pruned.emplace(std::move(r.model));
  } else {
    threshold = o.threshold.value_or(0.0);
    pruned.emplace(prune_entropy(m, threshold));
  }
  write_arpa_file(*pruned, o.out);
  for (int n = 1; n <= m.order(); ++n) {
    std::cerr << "order=" << n << " before=" << m.size(n) << " after=" << pruned->size(n) << "\n";
  }
  std::cerr << "threshold=" << format_shortest(threshold) << "\n";
  return 0;
}

int cmd_interp(const Options &o) {
  ComponentList models = load_models(o.models);
  std::vector<std::string> labels = o.labels.empty() ? component_labels(models.size()) : o.labels;
  if (labels.size() != models.size()) throw Error(ErrorCode::kLabelMismatch, "one label per model expected");
  WeightVector w = WeightVector::uniform(labels);
  if (!o.weights.empty()) {
    w = parse_weights(o.weights, labels);
  } else if (!o.heldout.empty()) {
    auto held = map_corpus(models.front()->vocab(), read_sentences_file(o.heldout));
    EmResult r = fit_weights_em(models, held, w);
    w = r.weights;
    std::cerr << "iterations=" << r.iterations << " loglik=" << fixed6(r.log_likelihood.back()) << "\n";
  }
  if (!o.weights_out.empty()) {
    std::ofstream out = open_output(o.weights_out);
    write_weights(w, out);
    finish_output(out, o.weights_out);
  }
  write_weights(w, std::cout);
  if (!o.out.empty()) write_arpa_file(interpolate_static(models, w), o.out);
  return 0;
}

int cmd_ppl(const Options &o) {
  ComponentList models = load_models(o.models);
  std::unique_ptr<LanguageModel> mixture;
  const LanguageModel *lm = models.front().get();
  if (models.size() > 1) {
    std::vector<std::string> labels = o.labels.empty() ? component_labels(models.size()) : o.labels;
    WeightVector w = o.weights.empty() ? WeightVector::uniform(labels) : parse_weights(o.weights, labels);
    mixture = std::make_unique<MixtureModel>(models, w);
    lm = mixture.get();
  }
  auto test = map_corpus(lm->vocab(), read_sentences_file(o.text));
  EvalReport r = perplexity(*lm, test, !o.no_eos);
  if (o.per_sentence) {
    for (std::size_t i = 0; i < r.sentences.size(); ++i) {
      const SentenceScore &s = r.sentences[i];
      std::cout << "sentence=" << i << " tokens=" << s.tokens << " logprob=" << fixed6(s.log_prob)
                << " oov=" << s.oov << "\n";
    }
  }
  std::cout << "ppl=" << fixed6(r.ppl) << " tokens=" << r.token_count << " oov=" << r.oov_count << "\n";
  return 0;
}

int cmd_rescore(const Options &o) {
  const std::string label = o.labels.empty() ? "lm" : o.labels.front();
  if (o.inputs.size() > 1 && o.out_dir.empty()) throw Error(ErrorCode::kBadArgument, "several lattices need --out-dir");
  std::optional<BackoffModel> local;
  std::optional<ShardedClient> client;
  int order = 0;
  if (!o.manifest.empty()) {
    if (o.vocab.empty()) throw Error(ErrorCode::kBadArgument, "remote rescoring needs --vocab");
    auto v = std::make_shared<const Vocabulary>(read_vocab_file(o.vocab));
    client.emplace(connect_tcp(v, read_shard_manifest_file(o.manifest)));
    order = client->order();
  } else {
    if (o.model.empty()) throw Error(ErrorCode::kBadArgument, "rescore needs --model or --manifest");
    local.emplace(read_arpa_file(o.model));
    order = local->order();
  }
  if (o.context_order > 0) order = o.context_order;
  for (const auto &path : o.inputs) {
    Lattice in = read_lattice_file(path);
    Lattice out = client ? rescore_remote(in, *client, label, order) : rescore(in, *local, label, order);
    std::string dest = o.out_dir.empty() ? o.out : (fs::path(o.out_dir) / fs::path(path).filename()).string();
    write_lattice_file(out, dest);
    std::cerr << "lattice=" << path << " nodes_in=" << in.node_count() << " nodes_out=" << out.node_count()
              << " edges_out=" << out.edges().size() << "\n";
  }
  return 0;
}

int cmd_mert(const Options &o) {
  TuneSet ts = read_tune_manifest(o.manifest);
  WeightVector init = o.weights.empty() ? WeightVector::uniform(ts.labels) : parse_weights(o.weights, ts.labels);
  MertOptions opt;
  opt.max_rounds = o.rounds;
  opt.nbest_size = o.nbest;
  opt.restarts = o.restarts;
  opt.seed = o.seed;
  MertResult r = mert(ts, init, opt);
  for (std::size_t i = 0; i < r.wer_trace.size(); ++i) std::cerr << "round=" << i << " wer=" << fixed6(r.wer_trace[i]) << "\n";
  std::cerr << "initial_wer=" << fixed6(r.initial_wer) << " final_wer=" << fixed6(r.final_wer) << "\n";
  if (o.out.empty()) {
    write_weights(r.weights, std::cout);
  } else {
    std::ofstream out = open_output(o.out);
    write_weights(r.weights, out);
    finish_output(out, o.out);
  }
  return 0;
}

int cmd_decode(const Options &o) {
  std::vector<Lattice> lattices;
  if (!o.manifest.empty()) {
    for (auto &item : read_tune_manifest(o.manifest).items) lattices.push_back(std::move(item.lattice));
  }
  for (const auto &path : o.inputs) lattices.push_back(read_lattice_file(path));
  if (lattices.empty()) throw Error(ErrorCode::kBadArgument, "decode needs lattices or --manifest");
  WeightVector w = o.weights.empty() ? WeightVector::uniform(lattices.front().labels())
                                     : parse_weights(o.weights, lattices.front().labels());
  std::ostringstream text;
  for (std::size_t i = 0; i < lattices.size(); ++i) {
    auto join = [](const std::vector<std::string> &words) {
      std::string s;
      for (const auto &x : words) s += (s.empty() ? "" : " ") + x;
      return s;
    };
    if (o.decode_nbest <= 1) {
      text << join(best_path(lattices[i], w).words) << "\n";
    } else {
      for (const Hypothesis &h : nbest(lattices[i], w, o.decode_nbest)) {
        text << i << "\t" << format_shortest(h.score) << "\t" << join(h.words) << "\n";
      }
    }
  }
  if (o.out.empty()) {
    std::cout << text.str();
  } else {
    write_text(o.out, text.str());
  }
  return 0;
}

int cmd_wer(const Options &o) {
  auto hyps = read_sentences_file(o.hyp);
  auto refs = read_sentences_file(o.ref);
  if (hyps.size() != refs.size()) {
    throw Error(ErrorCode::kBadArgument, "hypothesis and reference files differ in line count");
  }
  std::vector<HypRef> pairs;
  for (std::size_t i = 0; i < refs.size(); ++i) pairs.push_back({hyps[i], refs[i]});
  if (o.per_sentence) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      WerReport r = word_error_rate(pairs[i].hyp, pairs[i].ref);
      std::cout << "sentence=" << i << " wer=" << fixed6(r.wer) << " sub=" << r.substitutions << " del=" << r.deletions
                << " ins=" << r.insertions << "\n";
    }
  }
  WerReport r = corpus_wer(pairs);
  std::string line = "wer=" + fixed6(r.wer) + " sub=" + std::to_string(r.substitutions) +
                     " del=" + std::to_string(r.deletions) + " ins=" + std::to_string(r.insertions) + "\n";
  std::cout << line;
  if (!o.out.empty()) write_text(o.out, line);
  return 0;
}

int cmd_shard(const Options &o) {
  BackoffModel m = read_arpa_file(o.model);
  ShardedModel sm = shard_model(m, o.shards);
  fs::create_directories(o.out_dir);
  for (std::size_t i = 0; i < sm.shards.size(); ++i) {
    std::string path = (fs::path(o.out_dir) / ("shard-" + std::to_string(i) + ".bin")).string();
    write_shard_file(*sm.shards[i], path);
    std::cout << "shard=" << i << " entries=" << sm.plan.entry_counts[i] << " file=" << path << "\n";
  }
  write_vocab_file(m.vocab(), (fs::path(o.out_dir) / "vocab.txt").string());
  return 0;
}

int cmd_serve_shard(const Options &o) {
  std::string bind = o.bind;
  if (bind.empty()) {
    const char *env = std::getenv("LMKIT_BIND");
    bind = env && *env ? env : kDefaultBind;
  }
  Endpoint endpoint = parse_endpoint(bind);
  auto store = std::make_shared<const ShardStore>(read_shard_file(o.shard));

  // Workers inherit the blocked mask, so only sigwait below sees the signals.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto server = serve_shard(store, endpoint);
  std::cout << "listening=" << server->endpoint().str() << " shard=" << store->index()
            << " entries=" << store->entry_count() << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server->stop();
  std::cerr << "stopped signal=" << sig << "\n";
  return 0;
}

// Corpora and lattices from two synthetic domains that share a lexicon.
int cmd_synth(const Options &o) {
  fs::create_directories(fs::path(o.out_dir) / "lattices");
  LexiconConfig lex;
  lex.seed = o.seed;
  lex.words = 1500;
  lex.classes = 30;
  TextSource dom_a(lex, o.seed + 1), dom_b(lex, o.seed + 2);
  auto write_corpus = [&](const std::string &name, const std::vector<Sentence> &corpus) {
    std::ostringstream text;
    for (const auto &s : corpus) {
      for (std::size_t i = 0; i < s.size(); ++i) text << (i ? " " : "") << s[i];
      text << "\n";
    }
    write_text((fs::path(o.out_dir) / name).string(), text.str());
  };
  write_corpus("train_a.txt", dom_a.corpus(o.sentences, o.seed + 10));
  write_corpus("train_b.txt", dom_b.corpus(o.sentences, o.seed + 11));
  auto held = dom_a.corpus(o.sentences / 20 + 1, o.seed + 12);
  auto held_b = dom_b.corpus(o.sentences / 20 + 1, o.seed + 13);
  held.insert(held.end(), held_b.begin(), held_b.end());
  write_corpus("heldout.txt", held);

  Rng rng(o.seed + 14);
  auto refs_a = dom_a.corpus(o.tune_items, o.seed + 15), refs_b = dom_b.corpus(o.tune_items, o.seed + 16);
  std::vector<Sentence> refs;
  std::ostringstream manifest;
  for (std::size_t i = 0; i < o.tune_items; ++i) {
    for (const Sentence *ref : {&refs_a[i], &refs_b[i]}) {
      char name[32];
      std::snprintf(name, sizeof name, "%04zu.lat", refs.size());
      write_lattice_file(noisy_lattice(*ref, dom_a.words(), LatticeNoise{}, rng),
                         (fs::path(o.out_dir) / "lattices" / name).string());
      manifest << "lattices/" << name << "\t";
      for (std::size_t k = 0; k < ref->size(); ++k) manifest << (k ? " " : "") << (*ref)[k];
      manifest << "\n";
      refs.push_back(*ref);
    }
  }
  write_corpus("refs.txt", refs);
  write_text((fs::path(o.out_dir) / "tune.tsv").string(), manifest.str());
  std::cerr << "sentences=" << o.sentences << " lattices=" << refs.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"lmkit: n-gram language model toolkit"};
  app.set_config("--config", "", "Read option defaults from a TOML/INI file; flags win");
  app.require_subcommand(1);
  Options o;

  auto order_opt = [&](CLI::App *c) { c->add_option("--order", o.order, "N-gram order")->check(CLI::PositiveNumber); };
  auto out_opt = [&](CLI::App *c, bool required) {
    auto *opt = c->add_option("-o,--out", o.out, "Output file");
    if (required) opt->required();
  };

  CLI::App *vocab = app.add_subcommand("vocab", "Build a vocabulary from text files");
  vocab->add_option("inputs", o.inputs, "Text files, one sentence per line")->required()->check(CLI::ExistingFile);
  vocab->add_option("--min-count", o.min_count, "Minimum word frequency")->check(CLI::PositiveNumber);
  vocab->add_option("--max-vocab", o.max_vocab, "Maximum size including reserved symbols");
  out_opt(vocab, true);

  CLI::App *count = app.add_subcommand("count", "Count n-grams, or merge count files");
  count->add_option("inputs", o.inputs, "Text files (count files with --merge)")->required()->check(CLI::ExistingFile);
  count->add_option("--vocab", o.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  order_opt(count);
  count->add_flag("--merge", o.merge, "Inputs are count files to merge");
  out_opt(count, true);

  CLI::App *estimate = app.add_subcommand("estimate", "Estimate a Kneser-Ney model from raw counts");
  estimate->add_option("--counts", o.counts, "Count file")->required()->check(CLI::ExistingFile);
  estimate->add_option("--vocab", o.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  estimate->add_option("--discount", o.discount, "auto, D or D1,D2,D3");
  out_opt(estimate, true);

  CLI::App *prune = app.add_subcommand("prune", "Entropy-prune a model");
  prune->add_option("--model", o.model, "ARPA model")->required()->check(CLI::ExistingFile);
  auto *th = prune->add_option("--threshold", o.threshold, "Relative entropy threshold")->check(CLI::NonNegativeNumber);
  prune->add_option("--target-size", o.target_size, "Total entry count to reach")->excludes(th);
  out_opt(prune, true);

  CLI::App *interp = app.add_subcommand("interp", "Interpolate models, fitting weights by EM on held-out text");
  interp->add_option("--models", o.models, "ARPA models")->required()->check(CLI::ExistingFile);
  interp->add_option("--labels", o.labels, "Component labels");
  auto *wopt = interp->add_option("--weights", o.weights, "Weights file or comma-separated values");
  interp->add_option("--heldout", o.heldout, "Held-out text for EM")->check(CLI::ExistingFile)->excludes(wopt);
  interp->add_option("--weights-out", o.weights_out, "Write the weights here");
  out_opt(interp, false);

  CLI::App *ppl = app.add_subcommand("ppl", "Perplexity of a model or mixture on text");
  ppl->add_option("--model,--models", o.models, "ARPA model(s)")->required()->check(CLI::ExistingFile);
  ppl->add_option("--weights", o.weights, "Mixture weights");
  ppl->add_option("--labels", o.labels, "Component labels");
  ppl->add_option("--text", o.text, "Test text")->required()->check(CLI::ExistingFile);
  ppl->add_flag("--no-eos", o.no_eos, "Do not score the end-of-sentence symbol");
  ppl->add_flag("--per-sentence", o.per_sentence, "Also print one line per sentence");

  CLI::App *rescore = app.add_subcommand("rescore", "Expand and rescore lattices with a model");
  rescore->add_option("inputs", o.inputs, "Lattice files")->required()->check(CLI::ExistingFile);
  auto *mopt = rescore->add_option("--model", o.model, "ARPA model")->check(CLI::ExistingFile);
  rescore->add_option("--manifest", o.manifest, "Shard manifest for remote scoring")->check(CLI::ExistingFile)->excludes(mopt);
  rescore->add_option("--vocab", o.vocab, "Vocabulary file for remote scoring")->check(CLI::ExistingFile);
  rescore->add_option("--labels", o.labels, "Feature label for the LM score")->expected(1);
  rescore->add_option("--order", o.context_order, "Context order (default: model order)")->check(CLI::PositiveNumber);
  rescore->add_option("--out-dir", o.out_dir, "Output directory for several lattices");
  out_opt(rescore, false);

  CLI::App *mert = app.add_subcommand("mert", "Tune log-linear lattice weights for minimum WER");
  mert->add_option("--manifest", o.manifest, "Tune manifest: lattice<TAB>reference")->required()->check(CLI::ExistingFile);
  mert->add_option("--weights", o.weights, "Initial weights (default uniform)");
  mert->add_option("--nbest", o.nbest, "N-best size per round")->check(CLI::PositiveNumber);
  mert->add_option("--rounds", o.rounds, "Maximum rounds")->check(CLI::PositiveNumber);
  mert->add_option("--restarts", o.restarts, "Random restarts per round");
  mert->add_option("--seed", o.seed, "Restart seed");
  out_opt(mert, false);

  CLI::App *decode = app.add_subcommand("decode", "Best path or n-best list of lattices");
  decode->add_option("inputs", o.inputs, "Lattice files")->check(CLI::ExistingFile);
  decode->add_option("--manifest", o.manifest, "Tune manifest")->check(CLI::ExistingFile);
  decode->add_option("--weights", o.weights, "Feature weights (default uniform)");
  decode->add_option("--nbest", o.decode_nbest, "Hypotheses per lattice")->check(CLI::PositiveNumber);
  out_opt(decode, false);

  CLI::App *wer = app.add_subcommand("wer", "Word error rate of hypotheses against references");
  wer->add_option("--hyp", o.hyp, "Hypotheses, one per line")->required()->check(CLI::ExistingFile);
  wer->add_option("--ref", o.ref, "References, one per line")->required()->check(CLI::ExistingFile);
  wer->add_flag("--per-sentence", o.per_sentence, "Also print one line per sentence");
  out_opt(wer, false);

  CLI::App *shard = app.add_subcommand("shard", "Split a model into shard files");
  shard->add_option("--model", o.model, "ARPA model")->required()->check(CLI::ExistingFile);
  shard->add_option("--shards", o.shards, "Shard count")->required()->check(CLI::PositiveNumber);
  shard->add_option("--out-dir", o.out_dir, "Output directory")->required();

  CLI::App *serve = app.add_subcommand("serve-shard", "Serve one shard over TCP until SIGINT or SIGTERM");
  serve->add_option("--shard", o.shard, "Shard file")->required()->check(CLI::ExistingFile);
  serve->add_option("--bind", o.bind, std::string("host:port; else $LMKIT_BIND; else ") + kDefaultBind);

  CLI::App *synth = app.add_subcommand("synth", "Write synthetic corpora and a lattice tune set");
  synth->add_option("--out-dir", o.out_dir, "Output directory")->required();
  synth->add_option("--seed", o.seed, "Seed");
  synth->add_option("--sentences", o.sentences, "Training sentences per domain")->check(CLI::PositiveNumber);
  synth->add_option("--tune-items", o.tune_items, "Reference sentences per domain")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: " << e.what() << "\n\n";
    CLI::App *sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return 1;
  }

  try {
    if (*vocab) return cmd_vocab(o);
    if (*count) return cmd_count(o);
    if (*estimate) return cmd_estimate(o);
    if (*prune) return cmd_prune(o);
    if (*interp) return cmd_interp(o);
    if (*ppl) return cmd_ppl(o);
    if (*rescore) return cmd_rescore(o);
    if (*mert) return cmd_mert(o);
    if (*decode) return cmd_decode(o);
    if (*wer) return cmd_wer(o);
    if (*shard) return cmd_shard(o);
    if (*serve) return cmd_serve_shard(o);
    if (*synth) return cmd_synth(o);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
