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

// echograph: generate data, train, decode, analyze and sweep from one binary.
// Every output lands under --out-dir; produced_files.json lists them.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "echograph/checkpoint.hpp"
#include "echograph/corpus.hpp"
#include "echograph/decode.hpp"
#include "echograph/error.hpp"
#include "echograph/experiment.hpp"
#include "echograph/lenpred.hpp"
#include "echograph/lm.hpp"
#include "echograph/manifest.hpp"
#include "echograph/metrics.hpp"
#include "echograph/random.hpp"
#include "echograph/scorer.hpp"
#include "echograph/seq2seq.hpp"

namespace fs = std::filesystem;
using namespace echograph;

namespace {

struct Options {
  std::uint64_t seed = 1;
  std::string out_dir = "runs/default";

  int n_train = 600;
  int n_dev = 100;
  int n_test = 200;
  int n_ood = 50;
  double min_seconds = 5.0;
  double max_seconds = 15.0;
  int vocab_size = 32;
  double noise = 0.0;
  double ood_bias = 1.0;
  double ood_noise_floor = 0.3;

  int epochs = 60;
  int batch_size = 8;
  double learning_rate = 0.5;
  double label_smoothing = 0.05;
  int lm_epochs = 10;
  double lm_learning_rate = 0.5;
  int lenpred_epochs = 20;
  double lenpred_learning_rate = 0.01;
  bool lenpred_init = true;

  int beam = 4;
  double k = 5.0;
  double alpha = 1.0;
  double lm_weight = 0.25;
  int max_output_tokens = 150;
  bool truncate = false;
  double eta = 1.3;
  int threshold_chars = 0;  // 0: 4x the mean reference length
  int stall_radius = 1;
  int workers = 0;

  std::string split = "test";
  std::string axis = "alpha";
  std::string scorer = "model";
  double p_loop = 0.9;

  SweepGrids grids;
};

// ---- output bookkeeping ----------------------------------------------------

class Outputs {
 public:
  explicit Outputs(fs::path root) : root_(std::move(root)) { fs::create_directories(root_ / "logs"); }

  const fs::path& root() const { return root_; }
  fs::path path(const std::string& rel) const { return root_ / rel; }
  void produced(const fs::path& p) { produced_.insert(fs::relative(p, root_).generic_string()); }

  void log(const std::string& line) const {
    std::ofstream out(root_ / "logs" / "echograph.log", std::ios::app);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << line << '\n';
    std::cerr << line << '\n';
  }

  // Merges this run's files into produced_files.json (paths and byte sizes).
  void write_manifest() {
    const fs::path manifest = root_ / "produced_files.json";
    std::set<std::string> all = produced_;
    if (fs::exists(manifest)) {
      std::ifstream in(manifest);
      try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& entry : j.at("files")) all.insert(entry.at("path").get<std::string>());
      } catch (const std::exception&) {
        throw ParseError(manifest.string() + ": malformed file list");
      }
    }
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const std::string& rel : all) {
      const fs::path p = root_ / rel;
      if (!fs::exists(p)) continue;
      files.push_back({{"path", rel}, {"bytes", fs::is_regular_file(p) ? fs::file_size(p) : 0}});
    }
    std::ofstream out(manifest, std::ios::trunc);
    out << nlohmann::ordered_json{{"files", files}}.dump(2) << '\n';
  }

 private:
  fs::path root_;
  std::set<std::string> produced_;
};

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw IoError(what + " not found: " + p.string());
}

// ---- shared configuration --------------------------------------------------

const std::vector<std::string> kSplits = {"train", "dev", "test", "ood"};

CorpusSpec corpus_spec(const Options& o, const std::string& split) {
  CorpusSpec s;
  s.n_utterances = split == "train" ? o.n_train : split == "dev" ? o.n_dev : split == "test" ? o.n_test : o.n_ood;
  s.min_seconds = o.min_seconds;
  s.max_seconds = o.max_seconds;
  s.vocab_size = o.vocab_size;
  s.noise = o.noise;
  s.domain = split == "ood" ? Domain::kOutOfDomain : Domain::kInDomain;
  s.seed = substream_seed(o.seed, "corpus/" + split);
  s.world_seed = substream_seed(o.seed, "world");
  s.ood_bias = o.ood_bias;
  s.ood_noise_floor = o.ood_noise_floor;
  s.id_prefix = split;
  return s;
}

Seq2SeqConfig model_config(const Options& o) {
  Seq2SeqConfig c;
  c.vocab_size = o.vocab_size;
  return c;
}

TrainConfig descent(const Options& o, int epochs, double lr, const std::string& stream) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = o.batch_size;
  t.learning_rate = lr;
  t.label_smoothing = o.label_smoothing;
  t.seed = substream_seed(o.seed, stream);
  return t;
}

DecoderConfig decoder_config(const Options& o) {
  DecoderConfig d;
  d.beam_width = o.beam;
  d.k = o.k;
  d.alpha = o.alpha;
  d.lm_weight = o.lm_weight;
  d.max_output_tokens = o.max_output_tokens;
  d.validate();
  return d;
}

fs::path manifest_path(const Outputs& out, const std::string& split) {
  return out.path("data/" + split + ".jsonl");
}

Corpus load_split(const Outputs& out, const std::string& split) {
  const fs::path p = manifest_path(out, split);
  require_file(p, "corpus manifest");
  return read_manifest(p);
}

void check_split(const std::string& split) {
  for (const auto& s : kSplits) {
    if (s == split) return;
  }
  throw UsageError("unknown split '" + split + "' (expected train, dev, test or ood)");
}

class LossCsv {
 public:
  explicit LossCsv(const fs::path& path) : out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    out_ << "step,epoch,train_loss,learning_rate\n";
  }
  TrainLog logger() {
    return [this](const LossPoint& p) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%ld,%d,%.9g,%.9g\n", p.step, p.epoch, p.train_loss, p.learning_rate);
      out_ << buf;
    };
  }

 private:
  std::ofstream out_;
};

// ---- models ---------------------------------------------------------------

struct LoadedModels {
  std::unique_ptr<Seq2SeqModel> asr;
  std::unique_ptr<Scorer> scorer;
  std::unique_ptr<RnnLm> lm;
  std::unique_ptr<LengthPredictor> lenpred;
};

LoadedModels load_models(const Options& o, const Outputs& out, bool need_lm, bool need_lenpred) {
  LoadedModels m;
  if (o.scorer == "model") {
    const fs::path p = out.path("models/asr.ckpt");
    require_file(p, "acoustic model checkpoint");
    m.asr = std::make_unique<Seq2SeqModel>(load_model(p));
    m.scorer = std::make_unique<Seq2SeqScorer>(*m.asr);
    if (need_lm) {
      const fs::path lp = out.path("models/lm.ckpt");
      require_file(lp, "language model checkpoint");
      m.lm = std::make_unique<RnnLm>(load_lm(lp));
    }
  } else if (o.scorer == "pathological") {
    PathologicalConfig pc;
    pc.vocab_size = o.vocab_size;
    pc.p_loop = o.p_loop;
    m.scorer = std::make_unique<PathologicalScorer>(pc);
  } else {
    throw UsageError("unknown scorer '" + o.scorer + "' (expected model or pathological)");
  }
  if (need_lenpred) {
    const fs::path p = out.path("models/lenpred.ckpt");
    require_file(p, "length predictor checkpoint");
    m.lenpred = std::make_unique<LengthPredictor>(load_length_predictor(p));
  }
  return m;
}

int threshold_for(const Options& o, const Corpus& corpus) {
  if (o.threshold_chars > 0) return o.threshold_chars;
  const auto refs = reference_infos(corpus);
  bool labeled = false;
  for (const auto& r : refs) labeled = labeled || !r.reference_text.empty();
  return labeled ? scaled_threshold(refs) : kDefaultEchographicThreshold;
}

std::string decode_stem(const Options& o) {
  std::string stem = o.split;
  if (o.scorer != "model") stem += "_" + o.scorer;
  if (o.truncate) stem += "_trunc";
  return stem;
}

// ---- commands ---------------------------------------------------------------

void cmd_gen_data(const Options& o, Outputs& out) {
  for (const auto& split : kSplits) {
    const CorpusSpec spec = corpus_spec(o, split);
    spec.validate();
    const Corpus corpus = generate_corpus(spec);
    const fs::path p = manifest_path(out, split);
    write_manifest(p, corpus);
    out.produced(p);
    for (const auto& u : corpus) out.produced(p.parent_path() / (split + ".feats") / (u.features.utterance_id + ".feat"));
    out.log("gen-data: wrote " + std::to_string(corpus.size()) + " " + split + " utterances to " + p.string());
  }
}

void cmd_train(const Options& o, Outputs& out) {
  const Corpus train = load_split(out, "train");
  const Corpus dev = load_split(out, "dev");
  fs::create_directories(out.path("models"));
  {
    const fs::path curve = out.path("logs/asr_loss.csv");
    LossCsv csv(curve);
    const Seq2SeqModel model =
        train_seq2seq(train, dev, model_config(o), descent(o, o.epochs, o.learning_rate, "train/asr"), csv.logger());
    const fs::path ckpt = out.path("models/asr.ckpt");
    save_model(ckpt, model);
    out.produced(curve);
    out.produced(ckpt);
    const double acc = greedy_token_accuracy(model, dev, o.max_output_tokens);
    nlohmann::ordered_json summary = {{"dev_greedy_token_accuracy", acc},
                                      {"parameters", model.params().num_scalars()}};
    const fs::path sp = out.path("models/asr_summary.json");
    std::ofstream(sp, std::ios::trunc) << summary.dump(2) << '\n';
    out.produced(sp);
    out.log("train: acoustic model saved to " + ckpt.string() + ", dev greedy token accuracy " + std::to_string(acc));
  }
  {
    RnnLmConfig lc;
    lc.vocab_size = o.vocab_size;
    const fs::path curve = out.path("logs/lm_loss.csv");
    LossCsv csv(curve);
    TrainConfig t = descent(o, o.lm_epochs, o.lm_learning_rate, "train/lm");
    t.label_smoothing = 0.0;
    const RnnLm lm = train_lm(train, lc, t, csv.logger());
    const fs::path ckpt = out.path("models/lm.ckpt");
    save_lm(ckpt, lm);
    out.produced(curve);
    out.produced(ckpt);
    out.log("train: language model saved to " + ckpt.string());
  }
}

void cmd_train_lenpred(const Options& o, Outputs& out) {
  const Corpus train = load_split(out, "train");
  const Corpus dev = load_split(out, "dev");
  const LengthPredictorConfig config = LengthPredictorConfig::matching(model_config(o));
  std::unique_ptr<Seq2SeqModel> init;
  std::size_t encoder_scalars = 0;
  if (o.lenpred_init) {
    const fs::path p = out.path("models/asr.ckpt");
    require_file(p, "acoustic model checkpoint");
    init = std::make_unique<Seq2SeqModel>(load_model(p));
    LengthPredictor probe(config, 0);
    encoder_scalars = probe.init_from_encoder(*init);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < probe.params().size(); ++i) {
      if (probe.params().name(i).rfind("enc.", 0) == 0) expected += probe.params().var(i)->value.size();
    }
    out.log("train-lenpred: initialized " + std::to_string(encoder_scalars) + " of " + std::to_string(expected) +
            " encoder parameters from " + p.string() + (encoder_scalars == expected ? " (match)" : " (MISMATCH)"));
  }
  LengthTrainConfig tc;
  tc.descent = descent(o, o.lenpred_epochs, o.lenpred_learning_rate, "train/lenpred");
  const fs::path curve = out.path("logs/lenpred_loss.csv");
  LossCsv csv(curve);
  const LengthPredictor model = train_length_predictor(train, config, tc, init.get(), csv.logger());
  const fs::path ckpt = out.path("models/lenpred.ckpt");
  save_length_predictor(ckpt, model);
  out.produced(curve);
  out.produced(ckpt);

  std::vector<std::string> ids;
  std::vector<LengthPrediction> preds;
  double ref_total = 0.0;
  for (const auto& u : dev) {
    const double lambda = lambda_forward(model, u.features);
    ids.push_back(u.features.utterance_id);
    preds.push_back({lambda, round_half_away(lambda)});
    ref_total += static_cast<double>(count_content_tokens(u.reference_tokens));
  }
  const fs::path pp = out.path("lenpred/dev_predictions.jsonl");
  write_predictions_jsonl(pp, ids, preds);
  out.produced(pp);
  const double mae = length_mae(model, dev);
  const double mean_ref = dev.empty() ? 0.0 : ref_total / static_cast<double>(dev.size());
  nlohmann::ordered_json summary = {{"dev_mae", mae},
                                    {"dev_mean_reference_tokens", mean_ref},
                                    {"encoder_parameters_copied", encoder_scalars}};
  const fs::path sp = out.path("lenpred/summary.json");
  std::ofstream(sp, std::ios::trunc) << summary.dump(2) << '\n';
  out.produced(sp);
  out.log("train-lenpred: saved " + ckpt.string() + ", dev MAE " + std::to_string(mae) + " tokens (mean reference " +
          std::to_string(mean_ref) + ")");
}

void cmd_decode(const Options& o, Outputs& out) {
  check_split(o.split);
  const Corpus corpus = load_split(out, o.split);
  const LoadedModels m = load_models(o, out, o.lm_weight > 0.0, o.truncate);
  DecodeSetup setup;
  setup.scorer = m.scorer.get();
  setup.lm = m.lm.get();
  setup.length_predictor = m.lenpred.get();
  setup.decoder = decoder_config(o);
  if (o.truncate) setup.truncation = TruncationPolicy{o.eta};
  setup.workers = o.workers;
  const std::vector<DecodedOutput> outputs = decode_corpus(corpus, setup);

  const std::string stem = decode_stem(o);
  const fs::path results = out.path("decode/" + stem + ".jsonl");
  const std::string attention_dir = "decode/" + stem + "_attention";
  fs::create_directories(out.path(attention_dir));
  std::ofstream res(results, std::ios::trunc);
  if (!res) throw IoError("cannot open " + results.string() + " for writing");
  for (const DecodedOutput& d : outputs) {
    const std::string rel = attention_dir + "/" + d.result.utterance_id + ".csv";
    write_attention_csv(out.path(rel), d.result.best.attention_trace);
    out.produced(out.path(rel));
    auto j = nlohmann::ordered_json::parse(decode_result_json(d.result, rel));
    j["truncated"] = d.truncated;
    if (d.prediction) {
      j["lambda"] = d.prediction->lambda;
      j["n_hat"] = d.prediction->n_hat;
    }
    res << j.dump() << '\n';
  }
  res.close();
  out.produced(results);
  if (m.lenpred) {
    std::vector<std::string> ids;
    std::vector<LengthPrediction> preds;
    for (const auto& d : outputs) {
      ids.push_back(d.result.utterance_id);
      preds.push_back(*d.prediction);
    }
    const fs::path pp = out.path("lenpred/" + o.split + "_predictions.jsonl");
    write_predictions_jsonl(pp, ids, preds);
    out.produced(pp);
  }
  out.log("decode: " + std::to_string(outputs.size()) + " utterances to " + results.string());
}

void cmd_analyze(const Options& o, Outputs& out) {
  check_split(o.split);
  const Corpus corpus = load_split(out, o.split);
  const std::string stem = decode_stem(o);
  const fs::path results = out.path("decode/" + stem + ".jsonl");
  require_file(results, "decode results");
  std::vector<DecodedUtterance> decoded;
  std::ifstream in(results);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DecodedUtterance d;
      d.utterance_id = j.at("utterance_id").get<std::string>();
      d.transcript = j.at("transcript").get<std::string>();
      if (!j.at("attention_csv").is_null()) {
        d.attention_trace = read_attention_csv(out.path(j.at("attention_csv").get<std::string>()));
      }
      decoded.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(results.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  const int threshold = threshold_for(o, corpus);
  const std::vector<ReferenceInfo> refs = reference_infos(corpus);
  const CorpusReport report = corpus_report(decoded, refs, threshold, o.stall_radius);
  const fs::path csv = out.path("reports/" + stem + "_report.csv");
  const fs::path summary = out.path("reports/" + stem + "_summary.json");
  fs::create_directories(csv.parent_path());
  write_report_csv(csv, report);
  write_summary_json(summary, report.summary);
  out.produced(csv);
  out.produced(summary);
  out.log("analyze: " + std::to_string(report.summary.n_flagged) + " of " + std::to_string(report.summary.n_utterances) +
          " flagged at " + std::to_string(threshold) + " chars; corpus WER " +
          std::to_string(100.0 * report.summary.corpus_wer) + "%");
}

void cmd_sweep(const Options& o, Outputs& out) {
  const SweepAxis axis = sweep_axis_from_string(o.axis);
  o.grids.validate();
  const Corpus in_domain = load_split(out, "test");
  const Corpus ood = load_split(out, "ood");
  const bool need_lm = o.scorer == "model" && (o.lm_weight > 0.0 || axis == SweepAxis::kLmWeight);
  const bool need_lenpred = o.truncate || axis == SweepAxis::kEta;
  const LoadedModels m = load_models(o, out, need_lm, need_lenpred);
  SweepSetup setup;
  setup.in_domain = &in_domain;
  setup.out_of_domain = &ood;
  setup.decode.scorer = m.scorer.get();
  setup.decode.lm = m.lm.get();
  setup.decode.length_predictor = m.lenpred.get();
  setup.decode.decoder = decoder_config(o);
  if (o.truncate) setup.decode.truncation = TruncationPolicy{o.eta};
  setup.decode.workers = o.workers;
  setup.threshold_chars = threshold_for(o, in_domain);
  setup.stall_radius = o.stall_radius;
  const std::vector<SweepRow> rows = run_sweep(setup, axis, o.grids.values(axis));
  std::string name = to_string(axis);
  if (o.scorer != "model") name += "_" + o.scorer;
  const fs::path p = out.path("sweeps/" + name + ".csv");
  write_sweep_csv(p, axis, rows);
  out.produced(p);
  out.log("sweep: " + std::to_string(rows.size()) + " rows over " + to_string(axis) + " to " + p.string() +
          " (threshold " + std::to_string(setup.threshold_chars) + " chars)");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"echograph: echographic transcription experiments on a synthetic speech task"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_config("--config", "", "TOML-style configuration file; command-line flags override it");

  app.add_option("--seed", o.seed, "Root seed for every random stream")->capture_default_str();
  app.add_option("--out-dir", o.out_dir, "Directory for all outputs")->capture_default_str();
  app.add_option("--n-train", o.n_train)->capture_default_str();
  app.add_option("--n-dev", o.n_dev)->capture_default_str();
  app.add_option("--n-test", o.n_test)->capture_default_str();
  app.add_option("--n-ood", o.n_ood)->capture_default_str();
  app.add_option("--min-seconds", o.min_seconds)->capture_default_str();
  app.add_option("--max-seconds", o.max_seconds)->capture_default_str();
  app.add_option("--vocab-size", o.vocab_size)->capture_default_str();
  app.add_option("--noise", o.noise, "In-domain feature noise")->capture_default_str();
  app.add_option("--ood-bias", o.ood_bias)->capture_default_str();
  app.add_option("--ood-noise-floor", o.ood_noise_floor)->capture_default_str();
  app.add_option("--epochs", o.epochs)->capture_default_str();
  app.add_option("--batch-size", o.batch_size)->capture_default_str();
  app.add_option("--learning-rate", o.learning_rate)->capture_default_str();
  app.add_option("--label-smoothing", o.label_smoothing)->capture_default_str();
  app.add_option("--lm-epochs", o.lm_epochs)->capture_default_str();
  app.add_option("--lm-learning-rate", o.lm_learning_rate)->capture_default_str();
  app.add_option("--lenpred-epochs", o.lenpred_epochs)->capture_default_str();
  app.add_option("--lenpred-learning-rate", o.lenpred_learning_rate)->capture_default_str();
  app.add_option("--lenpred-init", o.lenpred_init, "Start the length predictor from the acoustic encoder")
      ->capture_default_str();
  app.add_option("--beam", o.beam)->capture_default_str();
  app.add_option("--k", o.k, "Length normalization offset K")->capture_default_str();
  app.add_option("--alpha", o.alpha, "Length normalization exponent")->capture_default_str();
  app.add_option("--lm-weight", o.lm_weight, "Shallow fusion weight")->capture_default_str();
  app.add_option("--max-output-tokens", o.max_output_tokens)->capture_default_str();
  app.add_flag("--truncate", o.truncate, "Truncate outputs to eta times the predicted length");
  app.add_option("--eta", o.eta)->capture_default_str();
  app.add_option("--threshold-chars", o.threshold_chars, "Echographic threshold; 0 means 4x mean reference length")
      ->capture_default_str();
  app.add_option("--stall-radius", o.stall_radius)->capture_default_str();
  app.add_option("--workers", o.workers, "Decode threads; 0 uses all cores")->capture_default_str();
  app.add_option("--split", o.split, "train, dev, test or ood")->capture_default_str();
  app.add_option("--axis", o.axis, "alpha, eta, beam or lm_weight")->capture_default_str();
  app.add_option("--scorer", o.scorer, "model or pathological")->capture_default_str();
  app.add_option("--p-loop", o.p_loop, "Loop probability of the pathological scorer")->capture_default_str();
  app.add_option("--alpha-grid", o.grids.alpha)->capture_default_str();
  app.add_option("--eta-grid", o.grids.eta)->capture_default_str();
  app.add_option("--beam-grid", o.grids.beam)->capture_default_str();
  app.add_option("--lm-weight-grid", o.grids.lm_weight)->capture_default_str();

  std::string command;
  for (const char* name : {"gen-data", "train", "train-lenpred", "decode", "analyze", "sweep"}) {
    app.add_subcommand(name)->callback([&command, name] { command = name; });
  }
  app.get_subcommand("gen-data")->description("Generate train/dev/test/ood corpora");
  app.get_subcommand("train")->description("Train the acoustic model and the language model");
  app.get_subcommand("train-lenpred")->description("Train the Poisson length predictor");
  app.get_subcommand("decode")->description("Beam-search decode one split");
  app.get_subcommand("analyze")->description("Per-utterance report and summary for a decoded split");
  app.get_subcommand("sweep")->description("Sweep one decoding parameter over its grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    Outputs out(o.out_dir);
    out.log("command: " + command + " (seed " + std::to_string(o.seed) + ")");
    if (command == "gen-data") cmd_gen_data(o, out);
    else if (command == "train") cmd_train(o, out);
    else if (command == "train-lenpred") cmd_train_lenpred(o, out);
    else if (command == "decode") cmd_decode(o, out);
    else if (command == "analyze") cmd_analyze(o, out);
    else if (command == "sweep") cmd_sweep(o, out);
    out.write_manifest();
  } catch (const Error& e) {
    std::cerr << "echograph: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "echograph: i/o error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  }
  return 0;
}
