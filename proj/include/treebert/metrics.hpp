#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace treebert {

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long true_positives = 0;
  long predicted = 0;  // after dropping [UNK] predictions
  long gold = 0;
};

/// Multiset token overlap between a prediction and the gold sequence.
/// Predicted [UNK] tokens are dropped; a gold [UNK] can never be matched.
/// Precision (recall) is 0 when nothing was predicted (expected).
Prf1 prf1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold);

enum class BleuMode { strict, smoothed };

std::string bleu_mode_name(BleuMode mode);
BleuMode parse_bleu_mode(const std::string& name);

/// Sentence BLEU with uniform weights over 1..max_n grams, clipped counts and
/// the brevity penalty. Strict mode returns 0 when any precision is 0 or the
/// candidate is empty; smoothed mode adds one to numerator and denominator
/// for n >= 2.
double bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
            BleuMode mode = BleuMode::strict, int max_n = 4);

/// 1 if c > r else exp(1 - r / c); 0 for an empty candidate.
double brevity_penalty(std::size_t candidate_length, std::size_t reference_length);

struct EvalCase {
  std::string id;
  std::vector<std::string> predicted;
  std::vector<std::string> gold;
};

/// Aggregate report with per-example scores. "f1" gives macro means and micro
/// P/R/F1; "bleu" gives strict and smoothed sentence-BLEU means.
nlohmann::json evaluation_report(const std::vector<EvalCase>& cases, const std::string& metric);

}  // namespace treebert
