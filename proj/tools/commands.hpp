#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kite::cli {

struct Invocation {
  std::string command;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::optional<std::filesystem::path> config;
  std::vector<std::string> overrides;
  std::filesystem::path out_dir = ".";

  std::filesystem::path corpus;      // vocab, pretrain
  std::filesystem::path triples;     // kg-train
  std::filesystem::path data_dir;    // drugs.tsv, events.tsv, labels.txt
  std::filesystem::path split;       // split.json
  std::filesystem::path vocab;       // vocab.txt
  std::filesystem::path kg;          // exported entity embeddings
  std::filesystem::path pretrained;  // MLM checkpoint
  std::filesystem::path checkpoint;  // classifier checkpoint
  std::string holdout = "none";      // train: none, fold<k>, u1, u2
  std::string subset = "u1";         // eval, seqlen: train, fold<k>, u1, u2, all
};

void cmd_synth(const Invocation& inv);
void cmd_vocab(const Invocation& inv);
void cmd_kg_train(const Invocation& inv);
void cmd_pretrain(const Invocation& inv);
void cmd_split(const Invocation& inv);
void cmd_train(const Invocation& inv);
void cmd_eval(const Invocation& inv);
void cmd_sts(const Invocation& inv);
void cmd_seqlen(const Invocation& inv);

}  // namespace kite::cli
