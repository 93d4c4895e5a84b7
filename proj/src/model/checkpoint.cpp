#include "treebert/checkpoint.hpp"

#include "treebert/errors.hpp"
#include "treebert/jsonl.hpp"

#include <bit>
#include <cstring>

namespace treebert {
namespace {

constexpr char kMagic[8] = {'T', 'B', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error("checkpoint truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string serialize_checkpoint(const TreeBertModel& model, const nlohmann::json& meta) {
  nlohmann::json header;
  header["config"] = model.config().to_json();
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& [l, r] : model.vocab().subtokens.merges()) merges.push_back({l, r});
  header["merges"] = std::move(merges);
  header["types"] = model.vocab().types.names();
  header["tokens"] = model.vocab().tokens.tokens();
  header["meta"] = meta.is_null() ? nlohmann::json::object() : meta;
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : model.params().all())
    params.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  header["params"] = std::move(params);
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& p : model.params().all())
    for (Eigen::Index i = 0; i < p.value.size(); ++i)
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(p.value.data()[i])));
  return out;
}

TreeBertModel deserialize_checkpoint(const std::string& bytes, nlohmann::json* meta) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error("not a checkpoint file");
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
  const auto length = get_le<std::uint64_t>(bytes, pos);
  if (pos + length > bytes.size()) throw Error("checkpoint truncated");
  const nlohmann::json header = nlohmann::json::parse(bytes.substr(pos, length));
  pos += length;

  std::vector<MergeRule> merges;
  for (const auto& m : header.at("merges")) merges.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
  Vocabularies vocab{SubtokenVocab(std::move(merges)),
                     TypeVocab(std::vector<std::string>(header.at("types").begin() + 1, header.at("types").end())),
                     TokenVocab(header.at("tokens").get<std::vector<std::string>>())};
  TreeBertModel model(ModelConfig::from_json(header.at("config")), std::move(vocab), 0);

  const auto& specs = header.at("params");
  auto& params = model.params().all();
  if (specs.size() != params.size()) throw Error("checkpoint parameter count does not match its config");
  std::size_t k = 0;
  for (auto& p : params) {
    const auto& spec = specs[k++];
    if (spec.at("name").get<std::string>() != p.name || spec.at("rows").get<Eigen::Index>() != p.value.rows() ||
        spec.at("cols").get<Eigen::Index>() != p.value.cols())
      throw Error("checkpoint parameter '" + p.name + "' does not match its config");
    for (Eigen::Index i = 0; i < p.value.size(); ++i)
      p.value.data()[i] = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos)));
  }
  if (pos != bytes.size()) throw Error("trailing bytes after checkpoint tensors");
  if (meta) *meta = header.at("meta");
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const TreeBertModel& model, const nlohmann::json& meta) {
  write_file(path, serialize_checkpoint(model, meta));
}

TreeBertModel load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta) {
  return deserialize_checkpoint(read_file(path), meta);
}

}  // namespace treebert
