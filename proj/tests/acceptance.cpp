// Copyright 2026 The Echograph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "echograph/corpus.hpp"
#include "echograph/decode.hpp"
#include "echograph/experiment.hpp"
#include "echograph/lenpred.hpp"
#include "echograph/lm.hpp"
#include "echograph/metrics.hpp"
#include "echograph/random.hpp"
#include "echograph/scorer.hpp"
#include "echograph/seq2seq.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace echograph;
namespace et = echograph::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& x) {
  const double mx = x.maxCoeff();
  return (x.array() - mx - std::log((x.array() - mx).exp().sum())).matrix();
}

double sequence_score(const Scorer& scorer, const LanguageModel* lm, double lm_weight, const FeatureSequence& f,
                      const std::vector<TokenId>& tokens) {
  StatePtr s = scorer.encode(f);
  StatePtr ls = lm ? lm->start() : nullptr;
  TokenId prev = TokenVocab::kBos;
  double total = 0.0;
  for (TokenId t : tokens) {
    const StepOutput out = scorer.step(s, prev);
    total += log_softmax(out.logits)(t);
    if (lm) {
      const LmStep step = lm->step(ls, prev);
      total += lm_weight * step.log_probs(t);
      ls = step.next_state;
    }
    s = out.next_state;
    prev = t;
  }
  return total;
}

Hypothesis brute_force(const Scorer& scorer, const LanguageModel* lm, const FeatureSequence& f,
                       const DecoderConfig& config) {
  std::optional<Hypothesis> best;
  et::for_each_content_sequence(scorer.vocab_size(), config.max_output_tokens - 1, [&](const std::vector<TokenId>& c) {
    Hypothesis h;
    h.tokens = c;
    h.tokens.push_back(TokenVocab::kEos);
    h.log_prob = sequence_score(scorer, lm, config.lm_weight, f, h.tokens);
    h.normalized_score = h.log_prob / length_penalty(static_cast<int>(h.tokens.size()), config.k, config.alpha);
    if (!best || ranks_before(h, *best)) best = h;
  });
  return *best;
}

std::vector<TokenId> greedy(const Scorer& scorer, const LanguageModel* lm, const FeatureSequence& f,
                            const DecoderConfig& config) {
  StatePtr s = scorer.encode(f);
  StatePtr ls = lm ? lm->start() : nullptr;
  TokenId prev = TokenVocab::kBos;
  std::vector<TokenId> out;
  while (static_cast<int>(out.size()) < config.max_output_tokens) {
    const StepOutput step = scorer.step(s, prev);
    Eigen::VectorXd fused = log_softmax(step.logits);
    if (lm) {
      const LmStep l = lm->step(ls, prev);
      fused += config.lm_weight * l.log_probs;
      ls = l.next_state;
    }
    fused(TokenVocab::kBos) = -std::numeric_limits<double>::infinity();
    Eigen::Index arg = 0;
    fused.maxCoeff(&arg);
    out.push_back(static_cast<TokenId>(arg));
    if (arg == TokenVocab::kEos) break;
    s = step.next_state;
    prev = static_cast<TokenId>(arg);
  }
  return out;
}

Outcome criterion1() {
  double worst = std::abs(length_penalty(5, 5.0, 1.0) - 10.0 / 6.0);
  bool ok = worst <= 1e-12;
  for (int len = 1; len <= 200; ++len) ok = ok && length_penalty(len, 5.0, 0.0) == 1.0;
  for (double alpha = 0.0; alpha <= 1.0; alpha += 0.125) {
    for (double k : {0.0, 1.0, 5.0, 10.0}) ok = ok && std::abs(length_penalty(1, k, alpha) - 1.0) <= 1e-12;
  }
  return {ok, "LP(5,K=5,a=1) error " + fmt("%.2e", worst)};
}

Outcome criterion2() {
  double worst_pmf = 0.0;
  double worst_sum = 0.0;
  double worst_grad = 0.0;
  for (double lambda : {0.5, 1.0, 5.0, 20.0}) {
    double log_fact = 0.0;
    double total = 0.0;
    for (long n = 0; n <= 200; ++n) {
      if (n > 1) log_fact += std::log(static_cast<double>(n));
      const double oracle = static_cast<double>(n) * std::log(lambda) - lambda - log_fact;
      worst_pmf = std::max(worst_pmf, std::abs(poisson_log_pmf(n, lambda) - oracle));
      total += std::exp(poisson_log_pmf(n, lambda));
      const double h = 1e-6;
      const double fd = (poisson_nll(n, lambda + h) - poisson_nll(n, lambda - h)) / (2.0 * h);
      const double expected = 1.0 - static_cast<double>(n) / lambda;
      worst_grad = std::max({worst_grad, std::abs(poisson_nll_grad(n, lambda) - expected),
                             std::abs(fd - expected) / std::max(1.0, std::abs(expected))});
    }
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }
  const bool ok = worst_pmf <= 1e-10 && worst_sum <= 1e-9 && worst_grad <= 1e-6;
  return {ok, "pmf error " + fmt("%.1e", worst_pmf) + ", |sum-1| " + fmt("%.1e", worst_sum) + ", gradient error " +
                  fmt("%.1e", worst_grad)};
}

Outcome criterion3() {
  std::vector<TokenId> seq;
  for (int i = 0; i < 30; ++i) seq.push_back(2 + i % 9);
  seq.push_back(TokenVocab::kEos);
  const std::size_t kept = count_content_tokens(truncate(seq, 10, 1.1));
  bool ok = kept == 11;
  Rng rng(substream_seed(1, "acceptance/truncate"));
  std::uniform_int_distribution<int> len(0, 80);
  std::uniform_int_distribution<TokenId> tok(2, 31);
  std::uniform_int_distribution<long> nh(0, 50);
  std::uniform_real_distribution<double> eta(1.0, 2.5);
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<TokenId> s(static_cast<std::size_t>(len(rng)));
    for (TokenId& t : s) t = tok(rng);
    if (trial % 3 != 0) s.push_back(TokenVocab::kEos);
    const long n = nh(rng);
    const double e = eta(rng);
    const auto once = truncate(s, n, e);
    if (truncate(once, n, e) != once || count_content_tokens(once) > count_content_tokens(s)) ++bad;
  }
  ok = ok && bad == 0;
  return {ok, "eta=1.1, n_hat=10 keeps " + std::to_string(kept) + "; " + std::to_string(bad) + "/1000 random violations"};
}

Outcome criterion4() {
  const FeatureSequence f = et::dummy_features();
  int beam_mismatch = 0;
  int greedy_mismatch = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const et::RandomTableScorer scorer(4, substream_seed(seed, "acceptance/scorer"));
    const et::RandomTableLm lm(4, substream_seed(seed, "acceptance/lm"));
    DecoderConfig config;
    config.max_output_tokens = 5;
    config.alpha = 0.25 * static_cast<double>(seed % 5);
    config.lm_weight = seed % 2 == 0 ? 0.25 : 0.0;
    const LanguageModel* lm_ptr = config.lm_weight > 0.0 ? &lm : nullptr;
    config.beam_width = 243;
    const Hypothesis oracle = brute_force(scorer, lm_ptr, f, config);
    const DecodeResult exact = beam_search(scorer, lm_ptr, f, config);
    if (exact.best.tokens != oracle.tokens || std::abs(exact.best.normalized_score - oracle.normalized_score) > 1e-12) {
      ++beam_mismatch;
    }
    config.beam_width = 1;
    if (beam_search(scorer, lm_ptr, f, config).best.tokens != greedy(scorer, lm_ptr, f, config)) ++greedy_mismatch;
  }
  return {beam_mismatch == 0 && greedy_mismatch == 0,
          std::to_string(50 - beam_mismatch) + "/50 match brute force, " + std::to_string(50 - greedy_mismatch) +
              "/50 beam-1 match greedy"};
}

Outcome criterion5() {
  Seq2SeqConfig c;
  c.vocab_size = 8;
  c.raw_feature_dim = 3;
  c.frame_stack = 2;
  c.encoder_hidden = 4;
  c.embed_dim = 3;
  c.decoder_hidden = 4;
  c.attention_dim = 4;
  c.output_hidden = 4;
  Seq2SeqModel model(c, 2);
  et::randomize(model.params(), 41, 0.5);
  Rng rng(5);
  const FeatureSequence a = et::random_features(rng, 7, 3, "a");
  const FeatureSequence b = et::random_features(rng, 5, 3, "b");
  auto seq_loss = [&] {
    return ad::add(model.sequence_loss(a, {2, 6, 3}, 0.05).first, model.sequence_loss(b, {7, 4}, 0.05).first);
  };
  double worst = 0.0;
  for (const auto& e : et::gradient_errors(model.params(), seq_loss)) worst = std::max(worst, e.relative_error);

  LengthPredictor lp(LengthPredictorConfig{.raw_feature_dim = 3, .frame_stack = 2, .encoder_hidden = 4}, 3);
  et::randomize(lp.params(), 43, 0.5);
  lp.params().get("head.a0")->value(0, 0) = 2.0;
  lp.params().get("head.b")->value *= 0.2;
  auto nll = [&] {
    return ad::add(ad::poisson_nll(lp.lambda_node(a), 5, kLambdaFloor), ad::poisson_nll(lp.lambda_node(b), 2, kLambdaFloor));
  };
  double worst_nll = 0.0;
  for (const auto& e : et::gradient_errors(lp.params(), nll)) worst_nll = std::max(worst_nll, e.relative_error);
  return {worst <= 1e-4 && worst_nll <= 1e-4,
          "max relative error seq2seq " + fmt("%.1e", worst) + ", Poisson NLL " + fmt("%.1e", worst_nll)};
}

Outcome criterion6() {
  const PathologicalScorer scorer(PathologicalConfig{});
  const FeatureSequence f = et::dummy_features(40, "loop");
  DecoderConfig config;
  config.k = 5.0;
  config.lm_weight = 0.0;
  config.alpha = 1.0;
  const DecodeResult looped = beam_search(scorer, nullptr, f, config);
  UtteranceReport report;
  report.char_count = looped.char_count;
  const bool capped = static_cast<int>(looped.best.tokens.size()) == config.max_output_tokens;
  const bool flagged = flag_echographic(report);
  config.alpha = 0.0;
  const DecodeResult early = beam_search(scorer, nullptr, f, config);
  const bool short_output = early.best.tokens.size() < 10;

  PathologicalConfig small;
  small.vocab_size = 5;
  const PathologicalScorer small_scorer(small);
  DecoderConfig exhaustive;
  exhaustive.max_output_tokens = 8;
  exhaustive.lm_weight = 0.0;
  std::ostringstream lengths;
  bool monotone = true;
  std::size_t previous = 9;
  std::size_t at_one = 0;
  std::size_t at_zero = 0;
  for (double alpha : {1.0, 0.8, 0.6, 0.4, 0.2, 0.0}) {
    exhaustive.alpha = alpha;
    const std::size_t n = brute_force(small_scorer, nullptr, f, exhaustive).tokens.size();
    lengths << (alpha == 1.0 ? "" : ",") << n;
    monotone = monotone && n <= previous;
    previous = n;
    if (alpha == 1.0) at_one = n;
    if (alpha == 0.0) at_zero = n;
  }
  const bool crossover = monotone && at_one == 8 && at_zero < 8;
  return {capped && flagged && short_output && crossover,
          "alpha=1: " + std::to_string(looped.best.tokens.size()) + " tokens, " + std::to_string(looped.char_count) +
              " chars" + (flagged ? " (flagged)" : " (not flagged)") + "; alpha=0: " +
              std::to_string(early.best.tokens.size()) + " tokens; exhaustive best length over alpha 1..0: " +
              lengths.str()};
}

struct TrainedSystem {
  Corpus train, dev, test, ood;
  std::optional<Seq2SeqModel> model;
  std::optional<RnnLm> lm;
  std::optional<LengthPredictor> lenpred;
  double seconds = 0.0;
  double dev_accuracy = 0.0;
};

CorpusSpec split_spec(std::uint64_t seed, const std::string& split, int n) {
  CorpusSpec s;
  s.n_utterances = n;
  s.domain = split == "ood" ? Domain::kOutOfDomain : Domain::kInDomain;
  s.seed = substream_seed(seed, "corpus/" + split);
  s.world_seed = substream_seed(seed, "world");
  s.id_prefix = split;
  return s;
}

TrainConfig descent(std::uint64_t seed, int epochs, double lr, const std::string& stream) {
  TrainConfig t;
  t.epochs = epochs;
  t.learning_rate = lr;
  t.seed = substream_seed(seed, stream);
  return t;
}

TrainedSystem train_system(std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  TrainedSystem s;
  s.train = generate_corpus(split_spec(seed, "train", 600));
  s.dev = generate_corpus(split_spec(seed, "dev", 100));
  s.test = generate_corpus(split_spec(seed, "test", 200));
  s.ood = generate_corpus(split_spec(seed, "ood", 50));
  s.model.emplace(train_seq2seq(s.train, s.dev, Seq2SeqConfig{}, descent(seed, 60, 0.5, "train/asr")));
  TrainConfig lm_tc = descent(seed, 10, 0.5, "train/lm");
  lm_tc.label_smoothing = 0.0;
  s.lm.emplace(train_lm(s.train, RnnLmConfig{}, lm_tc));
  LengthTrainConfig lc;
  lc.descent = descent(seed, 20, 0.01, "train/lenpred");
  s.lenpred.emplace(train_length_predictor(s.train, LengthPredictorConfig::matching(Seq2SeqConfig{}), lc, &*s.model));
  s.dev_accuracy = greedy_token_accuracy(*s.model, s.dev);
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

Outcome criterion7(const TrainedSystem& sys) {
  const Seq2SeqScorer scorer(*sys.model);
  DecodeSetup setup;
  setup.scorer = &scorer;
  setup.lm = &*sys.lm;
  setup.length_predictor = &*sys.lenpred;
  const auto test_out = decode_corpus(sys.test, setup);
  const auto ood_out = decode_corpus(sys.ood, setup);
  const int threshold = scaled_threshold(reference_infos(sys.test));

  auto truncated = [](std::vector<DecodedOutput> outs, double eta) {
    for (auto& o : outs) o.truncated = apply_truncation(o.result, o.prediction->n_hat, eta);
    return outs;
  };
  auto report = [&](const Corpus& c, const std::vector<DecodedOutput>& outs) {
    return corpus_report(as_decoded_utterances(outs), reference_infos(c), threshold).summary;
  };
  const ReportSummary in_base = report(sys.test, test_out);
  const ReportSummary in_cut = report(sys.test, truncated(test_out, 1.3));
  const ReportSummary ood_base = report(sys.ood, ood_out);
  const ReportSummary ood_cut = report(sys.ood, truncated(ood_out, 1.3));

  const double delta_points = 100.0 * std::abs(in_cut.corpus_wer - in_base.corpus_wer);
  const bool wer_ok = delta_points <= 0.5;
  const bool flag_ok = ood_base.n_flagged > 0 && 2 * ood_cut.n_flagged <= ood_base.n_flagged;
  std::string detail = "in-domain WER " + fmt("%.2f", 100.0 * in_base.corpus_wer) + "% -> " +
                       fmt("%.2f", 100.0 * in_cut.corpus_wer) + "% (|delta| " + fmt("%.2f", delta_points) +
                       " points); out-of-domain flagged " + std::to_string(ood_base.n_flagged) + " -> " +
                       std::to_string(ood_cut.n_flagged) + " of " + std::to_string(ood_base.n_utterances) +
                       " (threshold " + std::to_string(threshold) + " chars); dev greedy accuracy " +
                       fmt("%.4f", sys.dev_accuracy) + "; training " + fmt("%.0f", sys.seconds) + " s";
  if (ood_base.n_flagged == 0) detail += "; no echographic baseline to reduce";
  return {wer_ok && flag_ok, detail};
}

Outcome criterion8(const TrainedSystem& sys) {
  double mean = 0.0;
  for (const Utterance& u : sys.test) mean += static_cast<double>(count_content_tokens(u.reference_tokens));
  mean /= static_cast<double>(sys.test.size());
  const double mae = length_mae(*sys.lenpred, sys.test);
  return {mae <= 0.1 * mean, "held-out MAE " + fmt("%.3f", mae) + " tokens vs mean reference " + fmt("%.2f", mean)};
}

std::size_t brute_distance(const std::vector<std::string>& a, std::size_t i, const std::vector<std::string>& b,
                           std::size_t j) {
  if (i == 0) return j;
  if (j == 0) return i;
  return std::min({brute_distance(a, i - 1, b, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1),
                   brute_distance(a, i - 1, b, j) + 1, brute_distance(a, i, b, j - 1) + 1});
}

Outcome criterion9() {
  PathologicalConfig pc;
  pc.trap_after = 0;
  const PathologicalScorer scorer(pc);
  DecoderConfig config;
  config.lm_weight = 0.0;
  config.max_output_tokens = 100;
  const DecodeResult r = beam_search(scorer, nullptr, et::dummy_features(25), config);
  const auto steps = static_cast<int>(r.best.attention_trace.rows());
  const MonotonicityStats stall = monotonicity_stats(r.best.attention_trace);
  const bool stall_ok = stall.max_stall == steps - 1;

  Eigen::MatrixXd diag = Eigen::MatrixXd::Identity(20, 20);
  const bool diag_ok = monotonicity_stats(diag).backward_steps == 0;

  std::vector<std::vector<std::string>> seqs = {{}};
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].size() == 6) continue;
    for (const char* w : {"HU", "HM"}) {
      auto next = seqs[i];
      next.push_back(w);
      seqs.push_back(next);
    }
  }
  long pairs = 0;
  long wrong = 0;
  for (const auto& ref : seqs) {
    if (ref.empty()) continue;
    for (const auto& hyp : seqs) {
      ++pairs;
      const double expected = static_cast<double>(brute_distance(ref, ref.size(), hyp, hyp.size())) /
                              static_cast<double>(ref.size());
      if (std::abs(wer(ref, hyp) - expected) > 1e-12) ++wrong;
    }
  }
  return {stall_ok && diag_ok && wrong == 0,
          "pathological max_stall " + std::to_string(stall.max_stall) + " over " + std::to_string(steps) +
              " steps; diagonal backward steps " + std::to_string(monotonicity_stats(diag).backward_steps) + "; " +
              std::to_string(pairs - wrong) + "/" + std::to_string(pairs) + " WER pairs match brute force"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run(const std::string& command) { return std::system(command.c_str()); }

Outcome criterion10(const fs::path& cli, const fs::path& work) {
  if (cli.empty() || !fs::exists(cli)) return {false, "command-line tool not found: " + cli.string()};
  const std::string common =
      " --seed 7 --n-train 40 --n-dev 10 --n-test 12 --n-ood 6 --epochs 2 --lm-epochs 1 --lenpred-epochs 1"
      " --max-output-tokens 40 --workers 2";
  const std::vector<std::string> steps = {
      "gen-data", "train", "train-lenpred", "decode --split test", "decode --split ood --truncate",
      "decode --split test --scorer pathological", "analyze --split test", "analyze --split ood --truncate",
      "sweep --axis eta", "sweep --axis alpha --scorer pathological"};
  std::vector<fs::path> dirs = {work / "repro_a", work / "repro_b"};
  for (const fs::path& d : dirs) {
    fs::remove_all(d);
    for (const std::string& step : steps) {
      const std::string cmd = "\"" + cli.string() + "\" " + step + common + " --out-dir \"" + d.string() + "\" >/dev/null 2>&1";
      if (run(cmd) != 0) return {false, "command failed: " + step};
    }
  }
  std::set<fs::path> files;
  for (const fs::path& d : dirs) {
    for (const auto& e : fs::recursive_directory_iterator(d)) {
      const std::string ext = e.path().extension().string();
      if (e.is_regular_file() && (ext == ".csv" || ext == ".json" || ext == ".jsonl")) files.insert(fs::relative(e.path(), d));
    }
  }
  int differing = 0;
  std::string first;
  for (const fs::path& rel : files) {
    if (!fs::exists(dirs[0] / rel) || !fs::exists(dirs[1] / rel) || slurp(dirs[0] / rel) != slurp(dirs[1] / rel)) {
      if (differing++ == 0) first = rel.string();
    }
  }
  std::string detail = std::to_string(steps.size()) + " commands, " + std::to_string(files.size() - differing) + "/" +
                       std::to_string(files.size()) + " CSV/JSON files identical";
  if (differing) detail += " (first difference: " + first + ")";
  return {differing == 0 && files.size() > 10, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string cli;
  std::string work = (fs::temp_directory_path() / "echograph-acceptance").string();
  std::vector<int> only;
  std::uint64_t seed = 1;
  app.add_option("--cli", cli, "Path to the echograph command-line tool");
  app.add_option("--work-dir", work, "Scratch directory for the reproducibility check")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--seed", seed, "Seed for the trained-model criteria")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  auto selected = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };
  std::optional<TrainedSystem> system;
  auto trained = [&]() -> const TrainedSystem& {
    if (!system) system = train_system(seed);
    return *system;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"length penalty formula", criterion1},
      {"Poisson likelihood", criterion2},
      {"truncation", criterion3},
      {"beam search exactness", criterion4},
      {"gradient checks", criterion5},
      {"looping scorer and length normalization", criterion6},
      {"truncation mitigates looping on a trained model", [&] { return criterion7(trained()); }},
      {"length predictor accuracy", [&] { return criterion8(trained()); }},
      {"alignment and error-rate diagnostics", criterion9},
      {"command-line reproducibility", [&] { return criterion10(cli, work); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!selected(n)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << o.detail << " [" << fmt("%.1f", secs) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
