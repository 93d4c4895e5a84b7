#pragma once

#include "treebert/corpus.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace treebert {

struct IngestConfig {
  Language language = Language::python;
  int max_paths = 100;
  int max_nodes = 20;
  int max_height = 32;
};

struct IngestResult {
  std::vector<CorpusRecord> records;
  std::vector<std::string> warnings;  // one line per skipped input
  int inputs = 0;                     // files or JSONL lines seen
};

/// Records for one source text. Each top-level function becomes its own
/// record (wrapped in a Module); a file without functions is one record.
/// Throws on tokenizer, parser or height errors.
std::vector<CorpusRecord> ingest_source(std::string_view source, const std::string& id, const IngestConfig& config);

/// Record for one JSON line: either a bare AST ({"type": ...}) whose code is
/// its terminal values, or {"tree": ..., "code": [...] | "...", "id", "lang"}.
CorpusRecord ingest_json_tree(const nlohmann::json& row, const std::string& id, const IngestConfig& config);

/// Ingests every regular file under a directory (sorted by path) or every
/// line of a JSONL file. Inputs that fail to parse are skipped with a warning.
IngestResult ingest(const std::filesystem::path& input, const IngestConfig& config);

}  // namespace treebert
