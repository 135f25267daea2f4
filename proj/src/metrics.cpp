/* Copyright 2026 The mtctc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "mtctc/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <sstream>

#include "mtctc/error.hpp"

namespace mtctc {

LabelSeq GreedyDecode(const ctc::LogProbSequence& lp) {
  ctc::Path path(lp.num_frames());
  for (int t = 0; t < lp.num_frames(); ++t) {
    int best = 0;
    for (int k = 1; k < lp.width(); ++k) {
      if (lp(t, k) > lp(t, best)) best = k;
    }
    path[t] = best;
  }
  return ctc::Collapse(path, lp.blank());
}

int EditDistance(std::span<const int> a, std::span<const int> b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

SampleEval ScoreSample(int word_id, int writer_id, LabelSeq reference,
                       LabelSeq hypothesis) {
  SampleEval s;
  s.word_id = word_id;
  s.writer_id = writer_id;
  s.edits = EditDistance(reference, hypothesis);
  s.reference = std::move(reference);
  s.hypothesis = std::move(hypothesis);
  return s;
}

EvalReport MakeReport(std::string split, std::vector<SampleEval> samples) {
  EvalReport r;
  r.split = std::move(split);
  for (const SampleEval& s : samples) {
    ++r.num_words;
    r.num_chars += static_cast<int64_t>(s.reference.size());
    if (s.hypothesis != s.reference) ++r.word_errors;
    r.char_edit_total += s.edits;
  }
  r.wer = r.num_words ? 100.0 * double(r.word_errors) / double(r.num_words) : 0.0;
  r.cer = r.num_chars ? 100.0 * double(r.char_edit_total) / double(r.num_chars) : 0.0;
  r.samples = std::move(samples);
  return r;
}

template <typename Scalar>
std::vector<SampleEval> DecodeSamples(const Model<Scalar>& model,
                                      std::span<const WordSample> samples) {
  const int64_t n = static_cast<int64_t>(samples.size());
  std::vector<SampleEval> out(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (int64_t i = 0; i < n; ++i) {
    const WordSample& s = samples[i];
    try {
      out[i] = ScoreSample(s.word_id, s.writer_id, s.chars,
                           GreedyDecode(model.Forward(s.image).chars));
    } catch (const Error& e) {
      errors[i] = std::make_exception_ptr(
          Error(e.kind(), "word " + std::to_string(s.word_id) + " writer " +
                              std::to_string(s.writer_id) + ": " + e.detail()));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

namespace reference {

template <typename Scalar>
std::vector<SampleEval> DecodeSamples(const Model<Scalar>& model,
                                      std::span<const WordSample> samples) {
  std::vector<SampleEval> out;
  out.reserve(samples.size());
  for (const WordSample& s : samples) {
    out.push_back(ScoreSample(s.word_id, s.writer_id, s.chars,
                              GreedyDecode(model.Forward(s.image).chars)));
  }
  return out;
}

}  // namespace reference

template <typename Scalar>
EvalReport Evaluate(const Model<Scalar>& model, const DatasetManifest& manifest,
                    std::string_view split) {
  if (model.label_map_hash != manifest.label_map_hash) {
    throw Error(ErrorKind::kConfigMismatch,
                "model and manifest were built from different label maps");
  }
  const std::vector<WordSample> samples = LoadSplit(manifest, split);
  return MakeReport(std::string(split), DecodeSamples(model, samples));
}

namespace {

std::string JoinIds(const LabelSeq& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(ids[i]);
  }
  return out;
}

LabelSeq ParseIds(const std::string& s) {
  LabelSeq ids;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) ids.push_back(std::stoi(part));
  return ids;
}

std::string FormatRate(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string SerializeReport(const EvalReport& r) {
  std::string out = "#mtctc-eval v1\n#fields=word_id writer_id edits reference hypothesis\n";
  for (const SampleEval& s : r.samples) {
    out += std::to_string(s.word_id) + '\t' + std::to_string(s.writer_id) + '\t' +
           std::to_string(s.edits) + '\t' + JoinIds(s.reference) + '\t' +
           JoinIds(s.hypothesis) + '\n';
  }
  out += "#summary\n";
  out += "split=" + r.split + '\n';
  out += "num_words=" + std::to_string(r.num_words) + '\n';
  out += "num_chars=" + std::to_string(r.num_chars) + '\n';
  out += "word_errors=" + std::to_string(r.word_errors) + '\n';
  out += "char_edit_total=" + std::to_string(r.char_edit_total) + '\n';
  out += "wer=" + FormatRate(r.wer) + '\n';
  out += "cer=" + FormatRate(r.cer) + '\n';
  return out;
}

EvalReport ParseReport(std::string_view text) {
  EvalReport r;
  std::istringstream in{std::string(text)};
  std::string line;
  bool in_summary = false, have_header = false, have_summary = false;
  int line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      if (line == "#mtctc-eval v1") {
        have_header = true;
        continue;
      }
      if (line == "#summary") {
        in_summary = have_summary = true;
        continue;
      }
      if (line[0] == '#') continue;
      if (!in_summary) {
        std::vector<std::string> f;
        std::istringstream fields(line);
        std::string part;
        while (std::getline(fields, part, '\t')) f.push_back(part);
        if (f.size() == 4) f.emplace_back();  // empty hypothesis
        if (f.size() != 5) throw std::invalid_argument("field count");
        SampleEval s;
        s.word_id = std::stoi(f[0]);
        s.writer_id = std::stoi(f[1]);
        s.edits = std::stoi(f[2]);
        s.reference = ParseIds(f[3]);
        s.hypothesis = ParseIds(f[4]);
        r.samples.push_back(std::move(s));
        continue;
      }
      const size_t eq = line.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("summary line");
      const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
      if (key == "split") r.split = value;
      else if (key == "num_words") r.num_words = std::stoll(value);
      else if (key == "num_chars") r.num_chars = std::stoll(value);
      else if (key == "word_errors") r.word_errors = std::stoll(value);
      else if (key == "char_edit_total") r.char_edit_total = std::stoll(value);
      else if (key == "wer") r.wer = std::stod(value);
      else if (key == "cer") r.cer = std::stod(value);
    }
  } catch (const std::exception&) {
    throw Error(ErrorKind::kParse, "eval report line " + std::to_string(line_no));
  }
  if (!have_header || !have_summary) {
    throw Error(ErrorKind::kParse, "not an eval report");
  }
  return r;
}

template std::vector<SampleEval> DecodeSamples(const Model<float>&, std::span<const WordSample>);
template std::vector<SampleEval> DecodeSamples(const Model<double>&, std::span<const WordSample>);
template std::vector<SampleEval> reference::DecodeSamples(const Model<float>&, std::span<const WordSample>);
template std::vector<SampleEval> reference::DecodeSamples(const Model<double>&, std::span<const WordSample>);
template EvalReport Evaluate(const Model<float>&, const DatasetManifest&, std::string_view);
template EvalReport Evaluate(const Model<double>&, const DatasetManifest&, std::string_view);

}  // namespace mtctc
