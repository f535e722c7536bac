#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kite::smiles {

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr std::int32_t kMaskId = 2;
inline constexpr std::int32_t kSepId = 3;
inline constexpr std::int32_t kReservedCount = 4;

class Vocabulary {
 public:
  // Reserved tokens only.
  Vocabulary();

  std::size_t size() const { return tokens_.size(); }
  // Unknown tokens map to kUnkId.
  std::int32_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  // Corpus frequency of each retained token (empty after load()).
  const std::map<std::string, std::size_t>& frequencies() const { return frequencies_; }

  // Text form: a fixed four-line reserved header, then one token per line
  // in id order.
  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t min_count);

 private:
  void append(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::map<std::string, std::size_t> frequencies_;
};

// Ids after the reserved block ordered by (frequency desc, token asc).
// Throws DataError on an empty corpus.
Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t min_count = 1);

struct TokenSequence {
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> segments;
  std::vector<std::uint8_t> attention_mask;  // 1 = real token
  std::size_t untruncated_length = 0;        // tokens(a) + 1 + tokens(b)

  std::size_t real_length() const;
  bool truncated() const { return untruncated_length > ids.size(); }
};

// tokens(a) SEP tokens(b), cut on the right to max_len and padded with PAD.
// Segment 0 through the SEP, 1 after; padding repeats the last real segment.
TokenSequence encode_pair(std::string_view a, std::string_view b, const Vocabulary& vocab,
                          std::size_t max_len = 500);
TokenSequence encode_pair(std::span<const std::string> tokens_a, std::span<const std::string> tokens_b,
                          const Vocabulary& vocab, std::size_t max_len = 500);

}  // namespace kite::smiles
