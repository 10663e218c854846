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

#include "echograph/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <numeric>
#include <thread>

#include "echograph/error.hpp"

namespace echograph {

void TruncationPolicy::validate() const {
  if (std::isnan(eta) || eta < 1.0) throw ConfigError("truncation multiple eta must be >= 1");
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "alpha") return SweepAxis::kAlpha;
  if (name == "eta") return SweepAxis::kEta;
  if (name == "beam") return SweepAxis::kBeam;
  if (name == "lm_weight" || name == "lm-weight") return SweepAxis::kLmWeight;
  throw UsageError("unknown sweep axis '" + name + "' (expected alpha, eta, beam or lm_weight)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kAlpha: return "alpha";
    case SweepAxis::kEta: return "eta";
    case SweepAxis::kBeam: return "beam";
    case SweepAxis::kLmWeight: return "lm_weight";
  }
  return "?";
}

const std::vector<double>& SweepGrids::values(SweepAxis axis) const {
  switch (axis) {
    case SweepAxis::kAlpha: return alpha;
    case SweepAxis::kEta: return eta;
    case SweepAxis::kBeam: return beam;
    case SweepAxis::kLmWeight: return lm_weight;
  }
  throw UsageError("unknown sweep axis");
}

void SweepGrids::validate() const {
  auto check = [](const std::vector<double>& grid, const char* name, auto ok) {
    if (grid.empty()) throw ConfigError(std::string(name) + " grid is empty");
    for (double v : grid) {
      if (!ok(v)) throw ConfigError(std::string(name) + " grid value " + std::to_string(v) + " is out of range");
    }
  };
  check(alpha, "alpha", [](double v) { return v >= 0.0 && v <= 1.0; });
  check(eta, "eta", [](double v) { return v >= 1.0; });
  check(beam, "beam", [](double v) { return v >= 1.0 && v == std::floor(v); });
  check(lm_weight, "lm_weight", [](double v) { return v >= 0.0; });
}

bool apply_truncation(DecodeResult& result, long n_hat, double eta) {
  Hypothesis& best = result.best;
  std::vector<TokenId> cut = truncate(best.tokens, n_hat, eta);
  if (cut == best.tokens) return false;
  best.tokens = std::move(cut);
  best.finished = true;
  const auto rows = std::min<Eigen::Index>(best.attention_trace.rows(), static_cast<Eigen::Index>(best.tokens.size()));
  best.attention_trace = best.attention_trace.topRows(rows).eval();
  const TokenVocab vocab(result.vocab_size);
  result.transcript = vocab.detokenize(best.tokens);
  result.char_count = static_cast<int>(result.transcript.size());
  return true;
}

namespace {

DecodedOutput decode_one(const Utterance& u, const DecodeSetup& setup) {
  DecodedOutput out;
  out.result = beam_search(*setup.scorer, setup.lm, u.features, setup.decoder);
  if (setup.length_predictor != nullptr) {
    LengthPrediction p;
    p.lambda = lambda_forward(*setup.length_predictor, u.features);
    p.n_hat = round_half_away(p.lambda);
    out.prediction = p;
    if (setup.truncation) out.truncated = apply_truncation(out.result, p.n_hat, setup.truncation->eta);
  }
  return out;
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  unsigned pool = workers > 0 ? static_cast<unsigned>(workers) : std::max(1u, std::thread::hardware_concurrency());
  pool = std::min<unsigned>(pool, static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  if (pool <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(pool);
  for (unsigned t = 0; t < pool; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<std::size_t> id_order(const Corpus& corpus) {
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return corpus[a].features.utterance_id < corpus[b].features.utterance_id;
  });
  return order;
}

}  // namespace

std::vector<DecodedOutput> decode_corpus(const Corpus& corpus, const DecodeSetup& setup) {
  if (setup.scorer == nullptr) throw ConfigError("decoding needs a scorer");
  setup.decoder.validate();
  if (setup.truncation) {
    setup.truncation->validate();
    if (setup.length_predictor == nullptr) throw ConfigError("truncation needs a length predictor");
  }
  const std::vector<std::size_t> order = id_order(corpus);
  std::vector<DecodedOutput> outputs(corpus.size());
  parallel_for(order.size(), setup.workers, [&](std::size_t i) { outputs[i] = decode_one(corpus[order[i]], setup); });
  return outputs;
}

std::vector<DecodedUtterance> as_decoded_utterances(const std::vector<DecodedOutput>& outputs) {
  std::vector<DecodedUtterance> out;
  out.reserve(outputs.size());
  for (const DecodedOutput& o : outputs) {
    out.push_back({o.result.utterance_id, o.result.transcript, o.result.best.attention_trace});
  }
  return out;
}

std::vector<ReferenceInfo> reference_infos(const Corpus& corpus) {
  std::vector<ReferenceInfo> out;
  out.reserve(corpus.size());
  for (const Utterance& u : corpus) {
    out.push_back({u.features.utterance_id, u.reference_text, u.features.duration_seconds()});
  }
  return out;
}

namespace {

struct Evaluation {
  int flagged = 0;
  std::optional<double> wer_percent;
};

Evaluation evaluate(const Corpus& corpus, const std::vector<DecodedOutput>& outputs, const SweepSetup& setup) {
  const std::vector<DecodedUtterance> decoded = as_decoded_utterances(outputs);
  const std::vector<ReferenceInfo> refs = reference_infos(corpus);
  const CorpusReport report = corpus_report(decoded, refs, setup.threshold_chars, setup.stall_radius);
  Evaluation e;
  e.flagged = report.summary.n_flagged;
  if (report.summary.n_scored > 0) e.wer_percent = 100.0 * report.summary.corpus_wer;
  return e;
}

std::vector<DecodedOutput> truncated_copy(std::vector<DecodedOutput> outputs, double eta) {
  for (DecodedOutput& o : outputs) {
    o.truncated = apply_truncation(o.result, o.prediction->n_hat, eta);
  }
  return outputs;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSetup& setup, SweepAxis axis, std::vector<double> grid) {
  if (grid.empty()) throw ConfigError(to_string(axis) + " grid is empty");
  std::sort(grid.begin(), grid.end());
  const Corpus empty;
  const Corpus& in_domain = setup.in_domain ? *setup.in_domain : empty;
  const Corpus& out_of_domain = setup.out_of_domain ? *setup.out_of_domain : empty;
  const bool flag_ood = !out_of_domain.empty();
  if (axis == SweepAxis::kEta && setup.decode.length_predictor == nullptr) {
    throw ConfigError("an eta sweep needs a length predictor");
  }
  if (axis == SweepAxis::kLmWeight && setup.decode.lm == nullptr) {
    throw ConfigError("an lm_weight sweep needs a language model");
  }

  auto row_from = [&](double value, const std::vector<DecodedOutput>& in_out,
                      const std::vector<DecodedOutput>& ood_out) {
    const Evaluation in_eval = evaluate(in_domain, in_out, setup);
    const Evaluation ood_eval = evaluate(out_of_domain, ood_out, setup);
    SweepRow row;
    row.value = value;
    row.flagged_count = flag_ood ? ood_eval.flagged : in_eval.flagged;
    row.in_domain_wer = in_eval.wer_percent;
    row.out_of_domain_wer = ood_eval.wer_percent;
    return row;
  };

  std::vector<SweepRow> rows;
  if (axis == SweepAxis::kEta) {
    // Truncation is a post-process, so one decode serves every eta.
    DecodeSetup base = setup.decode;
    base.truncation.reset();
    const auto in_out = decode_corpus(in_domain, base);
    const auto ood_out = decode_corpus(out_of_domain, base);
    for (double eta : grid) {
      TruncationPolicy{eta}.validate();
      rows.push_back(row_from(eta, truncated_copy(in_out, eta), truncated_copy(ood_out, eta)));
    }
    return rows;
  }
  for (double value : grid) {
    DecodeSetup s = setup.decode;
    switch (axis) {
      case SweepAxis::kAlpha: s.decoder.alpha = value; break;
      case SweepAxis::kBeam:
        if (value < 1.0 || value != std::floor(value)) throw ConfigError("beam widths must be positive integers");
        s.decoder.beam_width = static_cast<int>(value);
        break;
      case SweepAxis::kLmWeight: s.decoder.lm_weight = value; break;
      case SweepAxis::kEta: break;
    }
    rows.push_back(row_from(value, decode_corpus(in_domain, s), decode_corpus(out_of_domain, s)));
  }
  return rows;
}

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_sweep_csv(const std::filesystem::path& path, SweepAxis axis, const std::vector<SweepRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "# axis=" << to_string(axis) << "\n";
  out << "value,flagged_count,in_domain_wer,out_of_domain_wer\n";
  for (const SweepRow& r : rows) {
    out << format_number(r.value) << ',' << r.flagged_count << ','
        << (r.in_domain_wer ? format_number(*r.in_domain_wer) : "") << ','
        << (r.out_of_domain_wer ? format_number(*r.out_of_domain_wer) : "") << '\n';
  }
}

void write_predictions_jsonl(const std::filesystem::path& path, const std::vector<std::string>& ids,
                             const std::vector<LengthPrediction>& predictions) {
  if (ids.size() != predictions.size()) throw ShapeError("prediction ids and values differ in count");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    nlohmann::ordered_json j = {{"utterance_id", ids[i]}, {"lambda", predictions[i].lambda}, {"n_hat", predictions[i].n_hat}};
    out << j.dump() << '\n';
  }
}

}  // namespace echograph
