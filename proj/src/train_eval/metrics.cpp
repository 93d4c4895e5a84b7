#include "treebert/metrics.hpp"

#include "treebert/bpe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace treebert {
namespace {

using Counts = std::map<std::vector<std::string>, long>;

Counts ngrams(const std::vector<std::string>& seq, int n) {
  Counts out;
  const auto len = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + len <= seq.size(); ++i)
    ++out[std::vector<std::string>(seq.begin() + static_cast<long>(i), seq.begin() + static_cast<long>(i + len))];
  return out;
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

Prf1 prf1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
  std::map<std::string, long> pred_counts;
  std::map<std::string, long> gold_counts;
  Prf1 out;
  for (const auto& t : predicted) {
    if (t == kUnkToken) continue;
    ++pred_counts[t];
    ++out.predicted;
  }
  for (const auto& t : gold) {
    ++out.gold;
    if (t != kUnkToken) ++gold_counts[t];
  }
  for (const auto& [token, n] : pred_counts) {
    auto it = gold_counts.find(token);
    if (it != gold_counts.end()) out.true_positives += std::min(n, it->second);
  }
  out.precision = out.predicted > 0 ? static_cast<double>(out.true_positives) / out.predicted : 0.0;
  out.recall = out.gold > 0 ? static_cast<double>(out.true_positives) / out.gold : 0.0;
  out.f1 = f1_of(out.precision, out.recall);
  return out;
}

std::string bleu_mode_name(BleuMode mode) { return mode == BleuMode::strict ? "strict" : "smoothed"; }

BleuMode parse_bleu_mode(const std::string& name) {
  if (name == "strict") return BleuMode::strict;
  if (name == "smoothed") return BleuMode::smoothed;
  throw std::invalid_argument("unknown BLEU mode: " + name);
}

double brevity_penalty(std::size_t candidate_length, std::size_t reference_length) {
  if (candidate_length == 0) return 0.0;
  if (candidate_length > reference_length) return 1.0;
  return std::exp(1.0 - static_cast<double>(reference_length) / static_cast<double>(candidate_length));
}

double bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference, BleuMode mode,
            int max_n) {
  if (max_n < 1) throw std::invalid_argument("max_n must be positive");
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const Counts cand = ngrams(candidate, n);
    const Counts ref = ngrams(reference, n);
    long matched = 0;
    long total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      auto it = ref.find(gram);
      if (it != ref.end()) matched += std::min(count, it->second);
    }
    double num = static_cast<double>(matched);
    double den = static_cast<double>(total);
    if (mode == BleuMode::smoothed && n >= 2) {
      num += 1.0;
      den += 1.0;
    }
    if (num == 0.0 || den == 0.0) return 0.0;
    log_sum += std::log(num / den) / max_n;
  }
  return brevity_penalty(candidate.size(), reference.size()) * std::exp(log_sum);
}

nlohmann::json evaluation_report(const std::vector<EvalCase>& cases, const std::string& metric) {
  nlohmann::json report;
  report["metric"] = metric;
  report["count"] = cases.size();
  nlohmann::json rows = nlohmann::json::array();
  if (metric == "f1") {
    double sp = 0, sr = 0, sf = 0;
    long tp = 0, predicted = 0, gold = 0;
    for (const auto& c : cases) {
      const Prf1 s = prf1(c.predicted, c.gold);
      sp += s.precision;
      sr += s.recall;
      sf += s.f1;
      tp += s.true_positives;
      predicted += s.predicted;
      gold += s.gold;
      rows.push_back({{"id", c.id}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
                      {"predicted", c.predicted}, {"gold", c.gold}});
    }
    const double n = cases.empty() ? 1.0 : static_cast<double>(cases.size());
    const double mp = predicted > 0 ? static_cast<double>(tp) / predicted : 0.0;
    const double mr = gold > 0 ? static_cast<double>(tp) / gold : 0.0;
    report["macro"] = {{"precision", sp / n}, {"recall", sr / n}, {"f1", sf / n}};
    report["micro"] = {{"precision", mp}, {"recall", mr}, {"f1", f1_of(mp, mr)}};
  } else if (metric == "bleu") {
    double strict = 0, smoothed = 0;
    for (const auto& c : cases) {
      const double b0 = bleu(c.predicted, c.gold, BleuMode::strict);
      const double b1 = bleu(c.predicted, c.gold, BleuMode::smoothed);
      strict += b0;
      smoothed += b1;
      rows.push_back({{"id", c.id}, {"bleu_strict", b0}, {"bleu_smoothed", b1}, {"predicted", c.predicted},
                      {"gold", c.gold}});
    }
    const double n = cases.empty() ? 1.0 : static_cast<double>(cases.size());
    report["bleu_strict"] = strict / n;
    report["bleu_smoothed"] = smoothed / n;
  } else {
    throw std::invalid_argument("unknown metric: " + metric);
  }
  report["examples"] = rows;
  return report;
}

}  // namespace treebert
