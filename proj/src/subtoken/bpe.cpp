#include "treebert/bpe.hpp"

#include "treebert/errors.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>

namespace treebert {

bool is_special_token(std::string_view token) {
  return std::find(kSpecialTokens.begin(), kSpecialTokens.end(), token) != kSpecialTokens.end();
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

SubtokenVocab::SubtokenVocab(std::vector<MergeRule> merges) : merges_(std::move(merges)) {
  auto add = [this](std::string s) {
    if (ids_.count(s)) return;
    ids_.emplace(s, size());
    subtokens_.push_back(std::move(s));
  };
  for (auto s : kSpecialTokens) add(std::string(s));
  for (char c = '!'; c <= '~'; ++c) add(std::string(1, c));
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& [left, right] = merges_[r];
    merge_rank_.emplace(left + '\t' + right, static_cast<int>(r));
    add(left + right);
  }
}

int SubtokenVocab::id(std::string_view subtoken) const {
  auto it = ids_.find(std::string(subtoken));
  return it == ids_.end() ? -1 : it->second;
}

std::vector<std::string> SubtokenVocab::split_strings(std::string_view token) const {
  if (is_special_token(token)) return {std::string(token)};
  std::vector<std::string> symbols;
  symbols.reserve(token.size());
  for (char c : token) symbols.emplace_back(in_alphabet(c) ? std::string(1, c) : std::string(kUnkToken));

  std::string key;
  for (;;) {
    int best_rank = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      key = symbols[i] + '\t' + symbols[i + 1];
      auto it = merge_rank_.find(key);
      if (it != merge_rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == std::numeric_limits<int>::max()) break;
    const auto& [left, right] = merges_[static_cast<std::size_t>(best_rank)];
    std::vector<std::string> merged;
    merged.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
        merged.push_back(left + right);
        ++i;
      } else {
        merged.push_back(std::move(symbols[i]));
      }
    }
    symbols = std::move(merged);
  }
  return symbols;
}

std::string SubtokenVocab::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < kSpecialTokens.size(); ++i) {
    if (i) out += '\t';
    out += kSpecialTokens[i];
  }
  out += '\n';
  for (const auto& [left, right] : merges_) {
    out += left;
    out += '\t';
    out += right;
    out += '\n';
  }
  return out;
}

SubtokenVocab SubtokenVocab::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw Error("vocab file is empty");
  std::string expected;
  for (std::size_t i = 0; i < kSpecialTokens.size(); ++i) {
    if (i) expected += '\t';
    expected += kSpecialTokens[i];
  }
  if (line != expected) throw Error("vocab file: unexpected specials header");
  std::vector<MergeRule> merges;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos)
      throw Error("vocab file line " + std::to_string(line_no) + ": expected 'left<TAB>right'");
    merges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return SubtokenVocab(std::move(merges));
}

std::uint64_t SubtokenVocab::fingerprint() const { return fnv1a64(serialize()); }

SubtokenVocab learn_bpe(std::span<const std::string> corpus, int num_merges) {
  // Word frequencies; words are sequences of symbols, with out-of-alphabet
  // characters acting as barriers that no pair may cross.
  std::map<std::string, long> counts;
  for (const auto& token : corpus)
    if (!token.empty() && !is_special_token(token)) ++counts[token];
  if (counts.empty()) throw EmptyCorpus();

  struct Word {
    std::vector<std::string> symbols;
    long count;
  };
  std::vector<Word> words;
  words.reserve(counts.size());
  for (const auto& [token, count] : counts) {
    Word w{{}, count};
    for (char c : token) w.symbols.emplace_back(SubtokenVocab::in_alphabet(c) ? std::string(1, c) : std::string());
    words.push_back(std::move(w));
  }

  std::vector<MergeRule> merges;
  for (int m = 0; m < num_merges; ++m) {
    std::map<MergeRule, long> pairs;
    for (const auto& w : words)
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i)
        if (!w.symbols[i].empty() && !w.symbols[i + 1].empty())
          pairs[{w.symbols[i], w.symbols[i + 1]}] += w.count;

    const MergeRule* best = nullptr;
    long best_count = 0;
    for (const auto& [pair, count] : pairs) {
      // std::map iterates pairs in lexicographic order, so strict '>' keeps the smallest on ties.
      if (count > best_count && !is_special_token(pair.first + pair.second)) {
        best = &pair;
        best_count = count;
      }
    }
    if (!best) break;
    const MergeRule rule = *best;
    const std::string joined = rule.first + rule.second;
    for (auto& w : words) {
      std::vector<std::string> merged;
      merged.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == rule.first && w.symbols[i + 1] == rule.second &&
            !w.symbols[i].empty() && !w.symbols[i + 1].empty()) {
          merged.push_back(joined);
          ++i;
        } else {
          merged.push_back(std::move(w.symbols[i]));
        }
      }
      w.symbols = std::move(merged);
    }
    merges.push_back(rule);
  }
  return SubtokenVocab(std::move(merges));
}

std::vector<int> split_token(const SubtokenVocab& vocab, std::string_view token) {
  std::vector<int> ids;
  for (const auto& s : vocab.split_strings(token)) {
    const int id = vocab.id(s);
    ids.push_back(id < 0 ? special::kUnk : id);
  }
  return ids;
}

}  // namespace treebert
