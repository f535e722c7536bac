#include "kite/smiles/vocab.hpp"

#include <algorithm>

#include "kite/common/error.hpp"
#include "kite/common/text.hpp"
#include "kite/smiles/tokenizer.hpp"

namespace kite::smiles {
namespace {

constexpr const char* kReserved[kReservedCount] = {"<PAD>", "<UNK>", "<MASK>", "<SEP>"};

}  // namespace

Vocabulary::Vocabulary() {
  for (const char* r : kReserved) append(r);
}

void Vocabulary::append(std::string token) {
  if (index_.count(token)) throw DataError("duplicate vocabulary token '" + token + "'");
  index_.emplace(token, static_cast<std::int32_t>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

std::int32_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end() || it->second < kReservedCount) return kUnkId;
  return it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it != index_.end() && it->second >= kReservedCount;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw IndexError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
  Vocabulary v;
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() < kReservedCount) throw DataError("vocabulary file is missing its reserved header");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (i < kReservedCount) {
      if (line != kReserved[i]) {
        throw DataError("expected reserved token " + std::string(kReserved[i]) + ", got '" + std::string(line) + "'",
                        i + 1);
      }
      continue;
    }
    if (line.empty()) throw DataError("empty vocabulary token", i + 1);
    if (v.index_.count(std::string(line))) throw DataError("duplicate vocabulary token '" + std::string(line) + "'", i + 1);
    v.append(std::string(line));
  }
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t min_count) {
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& s : corpus)
    for (auto& t : tokenize(s)) ++freq[t];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [t, n] : freq)
    if (n >= min_count) kept.emplace_back(t, n);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  Vocabulary v;
  for (auto& [t, n] : kept) {
    v.append(t);
    v.frequencies_[t] = n;
  }
  return v;
}

std::size_t TokenSequence::real_length() const {
  return static_cast<std::size_t>(std::count(attention_mask.begin(), attention_mask.end(), std::uint8_t{1}));
}

TokenSequence encode_pair(std::span<const std::string> ta, std::span<const std::string> tb, const Vocabulary& vocab,
                          std::size_t max_len) {
  if (max_len == 0) throw ConfigError("max_len must be positive");
  TokenSequence seq;
  seq.untruncated_length = ta.size() + 1 + tb.size();
  seq.ids.reserve(max_len);
  auto push = [&](std::int32_t id, std::int32_t segment) {
    if (seq.ids.size() == max_len) return;
    seq.ids.push_back(id);
    seq.segments.push_back(segment);
    seq.attention_mask.push_back(1);
  };
  for (const auto& t : ta) push(vocab.id(t), 0);
  push(kSepId, 0);
  for (const auto& t : tb) push(vocab.id(t), 1);
  const std::int32_t last_segment = seq.segments.back();
  while (seq.ids.size() < max_len) {
    seq.ids.push_back(kPadId);
    seq.segments.push_back(last_segment);
    seq.attention_mask.push_back(0);
  }
  return seq;
}

TokenSequence encode_pair(std::string_view a, std::string_view b, const Vocabulary& vocab, std::size_t max_len) {
  const auto ta = tokenize(a);
  const auto tb = tokenize(b);
  return encode_pair(ta, tb, vocab, max_len);
}

}  // namespace kite::smiles
