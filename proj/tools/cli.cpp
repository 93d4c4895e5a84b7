#include "cli.hpp"

#include "treebert/bpe.hpp"
#include "treebert/checkpoint.hpp"
#include "treebert/corruption.hpp"
#include "treebert/decode.hpp"
#include "treebert/errors.hpp"
#include "treebert/ingest.hpp"
#include "treebert/jsonl.hpp"
#include "treebert/metrics.hpp"
#include "treebert/train.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <set>

namespace treebert::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("TREEBERT_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

// Input paths are recorded relative to the output's directory.
std::string relative_to(const fs::path& path, const fs::path& out) {
  const fs::path base = fs::absolute(out).lexically_normal().parent_path();
  return fs::absolute(path).lexically_normal().lexically_relative(base).generic_string();
}

void write_config(const fs::path& out, const std::string& command, json args) {
  json j;
  j["command"] = command;
  j["args"] = std::move(args);
  write_file(out.string() + ".config.json", j.dump(2) + "\n");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<CorpusRecord> load_corpus(const fs::path& path) {
  std::vector<CorpusRecord> out;
  for (const auto& row : read_jsonl(path)) out.push_back(record_from_json(row));
  return out;
}

std::vector<TrainingExample> load_examples(const fs::path& path) {
  std::vector<TrainingExample> out;
  for (const auto& row : read_jsonl(path)) out.push_back(example_from_json(row));
  return out;
}

// BPE training text: code tokens and value-node labels.
std::vector<std::string> bpe_text(const std::vector<TrainingExample>& examples) {
  std::vector<std::string> out;
  for (const auto& ex : examples) {
    for (const auto& t : ex.target)
      if (!is_special_token(t)) out.push_back(t);
    for (const auto& p : ex.paths)
      for (const auto& n : p.nodes)
        if (n.is_value) out.push_back(n.label);
  }
  return out;
}

struct IngestArgs {
  std::string input, out, lang = "python";
  int max_paths = 100, max_nodes = 20, max_height = 32;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  IngestConfig cfg;
  cfg.language = parse_language(a.lang);
  cfg.max_paths = a.max_paths;
  cfg.max_nodes = a.max_nodes;
  cfg.max_height = a.max_height;
  if (!fs::exists(a.input)) throw Error("input not found: " + a.input);
  IngestResult result = ingest(a.input, cfg);
  for (const auto& w : result.warnings) err << "warning: skipped " << w << "\n";
  std::vector<json> rows;
  for (const auto& r : result.records) rows.push_back(record_to_json(r));
  write_jsonl(a.out, rows);
  write_config(a.out, "ingest",
               {{"input", relative_to(a.input, a.out)}, {"lang", a.lang}, {"max_paths", a.max_paths},
                {"max_nodes", a.max_nodes}, {"max_height", a.max_height}});
  out << "inputs " << result.inputs << ", records " << result.records.size() << ", skipped "
      << result.warnings.size() << "\n";
  return kExitOk;
}

struct VocabArgs {
  std::string input, out;
  int merges = 200;
};

int cmd_vocab(const VocabArgs& a, std::ostream& out) {
  std::vector<std::string> text;
  for (const auto& r : load_corpus(a.input)) {
    text.insert(text.end(), r.code.begin(), r.code.end());
    for (const auto& p : r.paths.paths)
      for (const auto& n : p.nodes)
        if (n.is_value) text.push_back(n.label);
  }
  const SubtokenVocab vocab = learn_bpe(text, a.merges);
  write_file(a.out, vocab.serialize());
  write_config(a.out, "vocab", {{"input", relative_to(a.input, a.out)}, {"merges", a.merges}});
  out << "subtokens " << vocab.size() << ", merges " << vocab.merges().size() << ", fingerprint "
      << hex64(vocab.fingerprint()) << "\n";
  return kExitOk;
}

struct CorruptArgs {
  std::string input, out, strategy = "level";
  double mask_ratio = 0.15, nop_prob = 0.5;
  std::uint64_t seed = 0;
  int copies = 1, max_code_len = 200, inspect = -1;
};

int cmd_corrupt(const CorruptArgs& a, std::ostream& out, std::ostream& err) {
  CorruptionConfig cfg;
  cfg.mask_ratio = a.mask_ratio;
  cfg.nop_prob = a.nop_prob;
  cfg.strategy = parse_mask_strategy(a.strategy);
  cfg.max_code_length = a.max_code_len;
  std::vector<CorpusRecord> records;
  std::size_t skipped = 0;
  for (auto& r : load_corpus(a.input)) {
    if (static_cast<int>(r.code.size()) > a.max_code_len - 2) {
      err << "warning: skipped " << r.id << ": " << r.code.size() << " code tokens\n";
      ++skipped;
      continue;
    }
    records.push_back(std::move(r));
  }
  const auto examples = corrupt_corpus(records, cfg, a.seed, a.copies);
  std::vector<json> rows;
  for (const auto& ex : examples) rows.push_back(example_to_json(ex));
  write_jsonl(a.out, rows);
  write_config(a.out, "corrupt",
               {{"input", relative_to(a.input, a.out)}, {"mask_ratio", a.mask_ratio}, {"nop_prob", a.nop_prob},
                {"strategy", a.strategy}, {"seed", a.seed}, {"copies", a.copies}, {"max_code_len", a.max_code_len}});
  int swapped = 0;
  for (const auto& ex : examples) swapped += ex.nop_label;
  out << "examples " << examples.size() << ", swapped " << swapped << ", skipped records " << skipped << "\n";
  if (a.inspect >= 0) {
    if (a.inspect >= static_cast<int>(examples.size())) throw Error("--inspect index out of range");
    out << inspect_example(examples[static_cast<std::size_t>(a.inspect)]);
  }
  return kExitOk;
}

struct PretrainArgs {
  std::string input, out, vocab, loss_csv, validation, position = "tree";
  int merges = 200;
  ModelConfig model;
  TrainConfig train;
  int log_every = 0;
};

int cmd_pretrain(PretrainArgs a, std::ostream& out, std::ostream& err) {
  const auto examples = load_examples(a.input);
  if (examples.empty()) throw EmptyCorpus();
  std::vector<TrainingExample> validation;
  if (!a.validation.empty()) validation = load_examples(a.validation);

  const SubtokenVocab subtokens =
      a.vocab.empty() ? learn_bpe(bpe_text(examples), a.merges) : SubtokenVocab::parse(read_file(a.vocab));
  if (a.position == "tree") {
    a.model.position_mode = PositionMode::tree;
  } else if (a.position == "learned") {
    a.model.position_mode = PositionMode::learned;
  } else {
    throw std::invalid_argument("unknown position mode: " + a.position);
  }
  a.model.dropout = a.train.dropout;
  a.model.validate();
  a.train.validate();

  TreeBertModel model(a.model, Vocabularies::build(subtokens, examples), a.train.seed);
  const std::string csv_path = a.loss_csv.empty() ? a.out + ".loss.csv" : a.loss_csv;

  auto log = [&](const LossRow& row) {
    if (a.log_every > 0 && row.step % a.log_every == 0)
      err << "step " << row.step << " loss " << row.loss << " tmlm " << row.loss_tmlm << " nop " << row.loss_nop
          << "\n";
  };
  const TrainResult result = train(model, examples, a.train, validation.empty() ? nullptr : &validation, log);
  write_file(csv_path, loss_curve_csv(result.curve));

  json args{{"input", relative_to(a.input, a.out)},
            {"vocab", a.vocab.empty() ? json(nullptr) : json(relative_to(a.vocab, a.out))},
            {"merges", a.merges},
            {"validation", a.validation.empty() ? json(nullptr) : json(relative_to(a.validation, a.out))},
            {"loss_csv", relative_to(csv_path, a.out)},
            {"model", a.model.to_json()},
            {"train", a.train.to_json()}};
  write_config(a.out, "pretrain", args);

  if (result.diverged_at) {
    err << "error: " << Divergence(*result.diverged_at).what() << "\n";
    return kExitDivergence;
  }
  json meta{{"train", a.train.to_json()},
            {"steps_run", result.steps_run},
            {"subtoken_fingerprint", hex64(subtokens.fingerprint())}};
  if (result.best_validation) meta["best_validation"] = *result.best_validation;
  const std::string bytes = serialize_checkpoint(model, meta);
  write_file(a.out, bytes);
  const double last = result.curve.empty() ? 0.0 : result.curve.back().loss;
  out << "steps " << result.steps_run << ", final loss " << last << ", checkpoint " << hex64(fnv1a64(bytes)) << "\n";
  return kExitOk;
}

// F1 is scored over subtokens; out-of-alphabet characters become [UNK].
std::vector<std::string> subtoken_units(const SubtokenVocab& vocab, const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    auto parts = vocab.split_strings(t);
    out.insert(out.end(), parts.begin(), parts.end());
  }
  return out;
}

struct EvalArgs {
  std::string checkpoint, input, out, metric = "f1", lt, vocab, feedback = "masked";
  int max_len = 0;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.metric != "f1" && a.metric != "bleu") throw std::invalid_argument("unknown metric: " + a.metric);
  if (a.feedback != "masked" && a.feedback != "plain") throw std::invalid_argument("unknown feedback: " + a.feedback);
  const TreeBertModel model = load_checkpoint(a.checkpoint);
  if (!a.vocab.empty()) {
    const SubtokenVocab given = SubtokenVocab::parse(read_file(a.vocab));
    if (given.fingerprint() != model.vocab().subtokens.fingerprint())
      throw VocabMismatch("subtoken vocabulary " + hex64(given.fingerprint()) + " does not match checkpoint " +
                          hex64(model.vocab().subtokens.fingerprint()));
  }
  const auto rows = read_jsonl(a.input);
  if (rows.empty()) throw EmptyCorpus();
  const int max_len = a.max_len > 0 ? a.max_len : model.config().max_code_len - 1;

  std::vector<EvalCase> cases;
  for (const auto& row : rows) {
    std::vector<NodePath> paths;
    std::vector<std::string> gold;
    std::set<std::string> visible;
    Language language;
    EvalCase c;
    if (row.contains("target")) {
      TrainingExample ex = example_from_json(row);
      c.id = ex.id;
      paths = std::move(ex.masked_paths);
      gold.assign(ex.target.begin(), ex.target.end() - 1);
      visible.insert(ex.masked_labels.begin(), ex.masked_labels.end());
      language = ex.language;
    } else {
      CorpusRecord r = record_from_json(row);
      c.id = r.id;
      paths = std::move(r.paths.paths);
      gold = std::move(r.code);
      language = r.language;
    }
    if (!a.lt.empty()) language = parse_language(a.lt);
    c.predicted = greedy_decode(model, paths, language, max_len, a.feedback == "masked" ? &visible : nullptr);
    c.gold = std::move(gold);
    if (a.metric == "f1") {
      c.predicted = subtoken_units(model.vocab().subtokens, c.predicted);
      c.gold = subtoken_units(model.vocab().subtokens, c.gold);
    }
    cases.push_back(std::move(c));
  }

  json report = evaluation_report(cases, a.metric);
  report["lt"] = a.lt.empty() ? json(nullptr) : json(a.lt);
  report["feedback"] = a.feedback;
  report["units"] = a.metric == "f1" ? "subtokens" : "tokens";
  write_file(a.out, report.dump(2) + "\n");
  write_config(a.out, "eval",
               {{"checkpoint", relative_to(a.checkpoint, a.out)}, {"input", relative_to(a.input, a.out)},
                {"metric", a.metric}, {"lt", a.lt}, {"feedback", a.feedback}, {"max_len", max_len}});
  if (a.metric == "f1") {
    out << "examples " << cases.size() << ", micro f1 " << report["micro"]["f1"].get<double>() << ", macro f1 "
        << report["macro"]["f1"].get<double>() << "\n";
  } else {
    out << "examples " << cases.size() << ", bleu strict " << report["bleu_strict"].get<double>() << ", smoothed "
        << report["bleu_smoothed"].get<double>() << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"TreeBERT pre-training on path sets"};
  app.require_subcommand(1);

  IngestArgs ingest_args;
  auto* ingest_cmd = app.add_subcommand("ingest", "Source directory or JSONL ASTs to a corpus of path sets");
  ingest_cmd->add_option("input", ingest_args.input, "directory or .jsonl file")->required();
  ingest_cmd->add_option("--out", ingest_args.out, "corpus JSONL")->required();
  ingest_cmd->add_option("--lang", ingest_args.lang)
      ->check(CLI::IsMember({"python", "java", "unseen", "PLT", "JLT", "UNK"}))
      ->capture_default_str();
  ingest_cmd->add_option("--max-paths", ingest_args.max_paths)->capture_default_str();
  ingest_cmd->add_option("--max-nodes", ingest_args.max_nodes)->capture_default_str();
  ingest_cmd->add_option("--max-height", ingest_args.max_height)->capture_default_str();

  VocabArgs vocab_args;
  auto* vocab_cmd = app.add_subcommand("vocab", "Learn a BPE subtoken vocabulary from a corpus");
  vocab_cmd->add_option("input", vocab_args.input)->required();
  vocab_cmd->add_option("--out", vocab_args.out)->required();
  vocab_cmd->add_option("--merges", vocab_args.merges)->capture_default_str();

  CorruptArgs corrupt_args;
  corrupt_args.seed = default_seed();
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Mask and swap a corpus into training examples");
  corrupt_cmd->add_option("input", corrupt_args.input)->required();
  corrupt_cmd->add_option("--out", corrupt_args.out)->required();
  corrupt_cmd->add_option("--mask-ratio", corrupt_args.mask_ratio)->capture_default_str();
  corrupt_cmd->add_option("--nop-prob", corrupt_args.nop_prob)->capture_default_str();
  corrupt_cmd->add_option("--strategy", corrupt_args.strategy)
      ->check(CLI::IsMember({"level", "topk", "random", "value-only"}))
      ->capture_default_str();
  corrupt_cmd->add_option("--seed", corrupt_args.seed)->capture_default_str();
  corrupt_cmd->add_option("--copies", corrupt_args.copies)->capture_default_str();
  corrupt_cmd->add_option("--max-code-len", corrupt_args.max_code_len)->capture_default_str();
  corrupt_cmd->add_option("--inspect", corrupt_args.inspect, "print the trace of example N");

  PretrainArgs pre;
  pre.train.seed = default_seed();
  auto* pre_cmd = app.add_subcommand("pretrain", "Train the encoder-decoder on corrupted examples");
  pre_cmd->add_option("input", pre.input)->required();
  pre_cmd->add_option("--out", pre.out, "checkpoint path")->required();
  pre_cmd->add_option("--vocab", pre.vocab, "subtoken vocabulary; learned from the examples when absent");
  pre_cmd->add_option("--merges", pre.merges)->capture_default_str();
  pre_cmd->add_option("--loss-csv", pre.loss_csv, "default <out>.loss.csv");
  pre_cmd->add_option("--validation", pre.validation, "examples for early stopping");
  pre_cmd->add_option("--alpha", pre.model.alpha)->capture_default_str();
  pre_cmd->add_option("--enc-layers", pre.model.num_layers_enc)->capture_default_str();
  pre_cmd->add_option("--dec-layers", pre.model.num_layers_dec)->capture_default_str();
  pre_cmd->add_option("--hidden", pre.model.hidden)->capture_default_str();
  pre_cmd->add_option("--heads", pre.model.heads)->capture_default_str();
  pre_cmd->add_option("--ffn", pre.model.ffn, "0 means 4 * hidden")->capture_default_str();
  pre_cmd->add_option("--d-node", pre.model.d_node)->capture_default_str();
  pre_cmd->add_option("--max-paths", pre.model.max_paths)->capture_default_str();
  pre_cmd->add_option("--max-nodes", pre.model.max_nodes)->capture_default_str();
  pre_cmd->add_option("--max-code-len", pre.model.max_code_len)->capture_default_str();
  pre_cmd->add_option("--max-height", pre.model.max_height)->capture_default_str();
  pre_cmd->add_option("--position", pre.position)->check(CLI::IsMember({"tree", "learned"}))->capture_default_str();
  pre_cmd->add_flag("--tie-output", pre.model.tie_output);
  pre_cmd->add_option("--steps", pre.train.total_steps)->capture_default_str();
  pre_cmd->add_option("--lr", pre.train.base_lr)->capture_default_str();
  pre_cmd->add_option("--warmup", pre.train.warmup_fraction, "fraction of steps")->capture_default_str();
  pre_cmd->add_option("--batch", pre.train.batch_size)->capture_default_str();
  pre_cmd->add_option("--weight-decay", pre.train.weight_decay)->capture_default_str();
  pre_cmd->add_option("--dropout", pre.train.dropout)->capture_default_str();
  pre_cmd->add_option("--clip-norm", pre.train.clip_norm)->capture_default_str();
  pre_cmd->add_option("--eval-interval", pre.train.eval_interval)->capture_default_str();
  pre_cmd->add_option("--patience", pre.train.patience)->capture_default_str();
  pre_cmd->add_option("--seed", pre.train.seed)->capture_default_str();
  pre_cmd->add_option("--log-every", pre.log_every)->capture_default_str();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Greedy-decode a corpus and score it");
  eval_cmd->add_option("checkpoint", eval_args.checkpoint)->required();
  eval_cmd->add_option("input", eval_args.input, "corpus or examples JSONL")->required();
  eval_cmd->add_option("--out", eval_args.out, "report JSON")->required();
  eval_cmd->add_option("--metric", eval_args.metric)->check(CLI::IsMember({"f1", "bleu"}))->capture_default_str();
  eval_cmd->add_option("--lt", eval_args.lt, "default: each example's language")
      ->check(CLI::IsMember({"PLT", "JLT", "UNK"}));
  eval_cmd->add_option("--vocab", eval_args.vocab, "check the checkpoint against this vocabulary");
  eval_cmd->add_option("--max-len", eval_args.max_len, "0 means max code length - 1")->capture_default_str();
  eval_cmd->add_option("--feedback", eval_args.feedback)->check(CLI::IsMember({"masked", "plain"}))->capture_default_str();

  std::vector<std::string> argv_storage{"treebert"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest_args, out, err);
    if (*vocab_cmd) return cmd_vocab(vocab_args, out);
    if (*corrupt_cmd) return cmd_corrupt(corrupt_args, out, err);
    if (*pre_cmd) return cmd_pretrain(pre, out, err);
    if (*eval_cmd) return cmd_eval(eval_args, out);
  } catch (const Divergence& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace treebert::cli
