#include "treebert/ingest.hpp"

#include "treebert/errors.hpp"
#include "treebert/jsonl.hpp"
#include "treebert/toy_parser.hpp"

#include <algorithm>

namespace treebert {
namespace {

void collect_values(const AstNode& node, std::vector<std::string>& out) {
  if (node.is_terminal()) {
    out.push_back(*node.value);
    return;
  }
  for (const auto& c : node.children) collect_values(c, out);
}

CorpusRecord make_record(const AstTree& tree, std::vector<std::string> code, const std::string& id,
                         Language language, const IngestConfig& config) {
  if (tree.height() > config.max_height) throw HeightExceeded(tree.height(), config.max_height);
  CorpusRecord r;
  r.id = id;
  r.language = language;
  r.code = std::move(code);
  r.paths = extract_paths(tree, config.max_paths, config.max_nodes);
  return r;
}

// Statement tokens in end-of-file form: no NEWLINE before the closing DEDENTs
// and no trailing NEWLINE.
std::vector<std::string> statement_tokens(const std::vector<std::string>& tokens, const StatementSpan& span) {
  std::vector<std::string> out(tokens.begin() + static_cast<long>(span.begin),
                               tokens.begin() + static_cast<long>(span.end));
  std::size_t dedents = 0;
  while (dedents < out.size() && out[out.size() - 1 - dedents] == kDedent) ++dedents;
  const std::size_t before = out.size() - dedents;
  if (before > 0 && out[before - 1] == kNewline) out.erase(out.begin() + static_cast<long>(before - 1));
  return out;
}

}  // namespace

std::vector<CorpusRecord> ingest_source(std::string_view source, const std::string& id, const IngestConfig& config) {
  if (config.language != Language::python)
    throw Error("source ingestion supports python only; provide other languages as JSON ASTs");
  const std::vector<std::string> tokens = tokenize_code(source, config.language);
  ToyModule module = parse_toy_module(tokens);
  std::vector<CorpusRecord> out;
  const auto& body = module.tree.root().children;
  int functions = 0;
  for (std::size_t i = 0; i < module.statements.size(); ++i) {
    if (!module.statements[i].is_function) continue;
    AstTree tree(make_node("Module", {body[i]}));
    out.push_back(make_record(tree, statement_tokens(tokens, module.statements[i]),
                              id + "#" + std::to_string(functions++), config.language, config));
  }
  if (out.empty()) out.push_back(make_record(module.tree, tokens, id, config.language, config));
  return out;
}

CorpusRecord ingest_json_tree(const nlohmann::json& row, const std::string& id, const IngestConfig& config) {
  if (!row.is_object()) throw SchemaError("$", "expected an object");
  if (row.contains("type")) {
    AstTree tree = ast_from_json(row);
    std::vector<std::string> code;
    collect_values(tree.root(), code);
    return make_record(tree, std::move(code), id, config.language, config);
  }
  if (!row.contains("tree")) throw SchemaError("$", "expected 'type' or 'tree'");
  const Language language = row.contains("lang") ? parse_language(row.at("lang").get<std::string>()) : config.language;
  AstTree tree = ast_from_json(row.at("tree"));
  std::vector<std::string> code;
  if (!row.contains("code")) {
    collect_values(tree.root(), code);
  } else if (row.at("code").is_string()) {
    code = tokenize_code(row.at("code").get<std::string>(), language);
  } else {
    code = row.at("code").get<std::vector<std::string>>();
  }
  return make_record(tree, std::move(code), row.value("id", id), language, config);
}

IngestResult ingest(const std::filesystem::path& input, const IngestConfig& config) {
  namespace fs = std::filesystem;
  IngestResult result;
  if (fs::is_directory(input)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(input))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      ++result.inputs;
      const std::string id = fs::relative(file, input).generic_string();
      try {
        auto records = ingest_source(read_file(file), id, config);
        for (auto& r : records) result.records.push_back(std::move(r));
      } catch (const Error& e) {
        result.warnings.push_back(id + ": " + e.what());
      }
    }
    return result;
  }
  const std::string text = read_file(input);
  std::size_t start = 0;
  int line_no = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++result.inputs;
    const std::string id = input.filename().string() + ":" + std::to_string(line_no);
    try {
      result.records.push_back(ingest_json_tree(nlohmann::json::parse(line), id, config));
    } catch (const nlohmann::json::exception& e) {
      result.warnings.push_back(id + ": " + e.what());
    } catch (const Error& e) {
      result.warnings.push_back(id + ": " + e.what());
    }
  }
  return result;
}

}  // namespace treebert
