#include "treebert/corruption.hpp"

#include "treebert/errors.hpp"

#include <sstream>

namespace treebert {

TrainingExample make_example(const CorpusRecord& record, const CorruptionConfig& config, Rng& rng) {
  TrainingExample ex;
  ex.id = record.id;
  ex.language = record.language;
  ex.paths = record.paths.paths;
  EncoderMask mask = apply_encoder_mask(record.paths, config.mask_ratio, rng, config.strategy);
  DecoderSide side = build_decoder_side(record.code, mask.masked_labels, record.language, config.max_code_length);
  NopResult nop = apply_nop(std::move(mask.masked_paths), config.nop_prob, rng);
  ex.masked_paths = std::move(nop.paths);
  ex.nop_label = nop.label;
  ex.masked_labels.assign(mask.masked_labels.begin(), mask.masked_labels.end());
  ex.decoder_input = std::move(side.input);
  ex.target = std::move(side.target);
  return ex;
}

std::vector<TrainingExample> corrupt_corpus(const std::vector<CorpusRecord>& records, const CorruptionConfig& config,
                                            std::uint64_t seed, int copies) {
  std::vector<TrainingExample> out;
  out.reserve(records.size() * static_cast<std::size_t>(std::max(copies, 0)));
  std::uint64_t index = 0;
  for (int c = 0; c < copies; ++c) {
    for (const auto& record : records) {
      Rng rng(Rng::derive(seed, index++));
      out.push_back(make_example(record, config, rng));
    }
  }
  return out;
}

nlohmann::json example_to_json(const TrainingExample& ex) {
  nlohmann::json j;
  j["id"] = ex.id;
  j["paths"] = paths_to_json(ex.paths);
  j["kinds"] = kinds_to_json(ex.paths);
  j["masked_paths"] = paths_to_json(ex.masked_paths);
  j["masked_kinds"] = kinds_to_json(ex.masked_paths);
  j["chains"] = chains_to_json(ex.paths);
  j["masked_labels"] = ex.masked_labels;
  j["decoder_input"] = ex.decoder_input;
  j["target"] = ex.target;
  j["nop_label"] = ex.nop_label;
  j["lt"] = std::string(language_tag(ex.language));
  return j;
}

TrainingExample example_from_json(const nlohmann::json& j) {
  try {
    TrainingExample ex;
    ex.id = j.value("id", std::string());
    ex.language = parse_language(j.at("lt").get<std::string>());
    ex.paths = paths_from_json(j.at("paths"), j.at("kinds"), j.at("chains"));
    ex.masked_paths = paths_from_json(j.at("masked_paths"), j.at("masked_kinds"), j.at("chains"));
    ex.masked_labels = j.value("masked_labels", std::vector<std::string>{});
    ex.decoder_input = j.at("decoder_input").get<std::vector<std::string>>();
    ex.target = j.at("target").get<std::vector<std::string>>();
    ex.nop_label = j.at("nop_label").get<int>();
    if (ex.nop_label != 0 && ex.nop_label != 1) throw SchemaError("$.nop_label", "must be 0 or 1");
    if (ex.decoder_input.size() != ex.target.size() + 1)
      throw SchemaError("$.decoder_input", "must be one token longer than target");
    return ex;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("$", std::string("malformed training example: ") + e.what());
  }
}

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string render(const NodePath& path) {
  std::string out;
  for (const auto& n : path.nodes) {
    if (!out.empty()) out += " -> ";
    out += n.label;
  }
  return out;
}

}  // namespace

std::string inspect_example(const TrainingExample& ex) {
  std::ostringstream os;
  os << "example " << ex.id << " [" << language_tag(ex.language) << "]\n";
  for (std::size_t i = 0; i < ex.paths.size(); ++i) {
    os << "  p" << i + 1 << "        " << render(ex.paths[i]) << '\n';
    os << "  p" << i + 1 << "^masked " << render(ex.masked_paths[i]) << '\n';
  }
  os << "  m^A = {" << join(ex.masked_labels) << "}\n";
  os << "  C^masked = " << join(ex.decoder_input) << '\n';
  os << "  target   = " << join(ex.target) << '\n';
  os << "  nop label y = " << ex.nop_label << '\n';
  return os.str();
}

}  // namespace treebert
