#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace treebert {

/// Source language of a snippet. Selects the lexer and the decoder's
/// language-type start token.
enum class Language { python, java, unseen };

inline constexpr std::string_view kNewline = "NEWLINE";
inline constexpr std::string_view kIndent = "INDENT";
inline constexpr std::string_view kDedent = "DEDENT";

/// Splits source into code tokens. Comments are dropped and spaces inside
/// string literals become '_'. For python, line structure becomes
/// NEWLINE / INDENT / DEDENT tokens; java and unseen use a brace-language
/// lexer with no layout tokens.
///
/// Throws UnbalancedIndentation when a dedent matches no open level.
std::vector<std::string> tokenize_code(std::string_view source, Language language);

/// Whitespace-separated tokens, for input that is already tokenized.
std::vector<std::string> split_pretokenized(std::string_view text);

/// Inverse of the python tokenizer on canonically formatted sources: four
/// spaces per indent level and the spacing produced by this function.
std::string detokenize(std::span<const std::string> tokens);

/// "[PLT]", "[JLT]" or "[UNK]".
std::string_view language_token(Language language);
/// "PLT", "JLT" or "UNK".
std::string_view language_tag(Language language);
/// Accepts "python"/"PLT", "java"/"JLT", "unseen"/"UNK" (case-sensitive).
Language parse_language(std::string_view name);

}  // namespace treebert
