#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace treebert {

/// Reserved subtokens, in id order. They are never split and never produced
/// by a merge.
inline constexpr std::array<std::string_view, 7> kSpecialTokens = {
    "[mask]", "[PLT]", "[JLT]", "[UNK]", "[CLS]", "[EOS]", "[PAD]"};

namespace special {
inline constexpr int kMask = 0;
inline constexpr int kPlt = 1;
inline constexpr int kJlt = 2;
inline constexpr int kUnk = 3;
inline constexpr int kCls = 4;
inline constexpr int kEos = 5;
inline constexpr int kPad = 6;
}  // namespace special

inline constexpr std::string_view kMaskToken = kSpecialTokens[special::kMask];
inline constexpr std::string_view kClsToken = kSpecialTokens[special::kCls];
inline constexpr std::string_view kEosToken = kSpecialTokens[special::kEos];
inline constexpr std::string_view kPadToken = kSpecialTokens[special::kPad];
inline constexpr std::string_view kUnkToken = kSpecialTokens[special::kUnk];

bool is_special_token(std::string_view token);

using MergeRule = std::pair<std::string, std::string>;

/// Learned merge table plus the dense subtoken id assignment.
///
/// Ids: the specials, then the base alphabet (printable ASCII '!'..'~'), then
/// each merge result in application order. The merge list alone therefore
/// determines every id.
class SubtokenVocab {
 public:
  SubtokenVocab() : SubtokenVocab(std::vector<MergeRule>{}) {}
  explicit SubtokenVocab(std::vector<MergeRule> merges);

  int size() const noexcept { return static_cast<int>(subtokens_.size()); }
  const std::vector<MergeRule>& merges() const noexcept { return merges_; }
  /// -1 when the subtoken is not in the vocabulary.
  int id(std::string_view subtoken) const;
  const std::string& subtoken(int id) const { return subtokens_.at(static_cast<std::size_t>(id)); }

  /// Applies merges in learned order; characters outside the alphabet become [UNK].
  std::vector<std::string> split_strings(std::string_view token) const;

  /// Text form: specials on the first line (tab-separated), then one
  /// "left<TAB>right" merge per line.
  std::string serialize() const;
  static SubtokenVocab parse(std::string_view text);

  /// FNV-1a of the serialized form.
  std::uint64_t fingerprint() const;

  static bool in_alphabet(char c) noexcept { return c >= '!' && c <= '~'; }

 private:
  std::vector<MergeRule> merges_;
  std::vector<std::string> subtokens_;
  std::unordered_map<std::string, int> ids_;
  std::unordered_map<std::string, int> merge_rank_;  // key: left + '\t' + right
};

/// Greedy BPE: repeatedly merges the most frequent adjacent pair, ties broken
/// by lexicographic order of (left, right). Stops early when no pair is left.
/// Throws EmptyCorpus when `corpus` has no learnable token.
SubtokenVocab learn_bpe(std::span<const std::string> corpus, int num_merges);

/// Subtoken ids of `token`; specials map to their own id.
std::vector<int> split_token(const SubtokenVocab& vocab, std::string_view token);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace treebert
