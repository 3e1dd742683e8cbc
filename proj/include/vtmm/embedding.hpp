#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "vtmm/types.hpp"

namespace vtmm {

inline constexpr std::size_t kWordDim = 300;
inline constexpr std::size_t kSentenceDim = 768;

/// Word vectors keyed by exact token, GloVe text format on disk.
class WordEmbeddingTable {
 public:
  /// Throws DimensionMismatch unless `values` has kWordDim entries.
  void insert(std::string token, Vector values);

  /// nullptr when the token is absent.
  const Vector* find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token) != nullptr; }
  std::size_t size() const { return entries_.size(); }

  static WordEmbeddingTable parse_glove(std::istream& in);
  static WordEmbeddingTable load_glove(const std::filesystem::path& path);

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_map<std::string, Vector, Hash, std::equal_to<>> entries_;
};

std::optional<Vector> lookup_word(const WordEmbeddingTable& table, std::string_view token);

/// Child -> parent label relation. Roots have no entry.
class LabelHierarchy {
 public:
  void set_parent(std::string child, std::string parent);
  std::optional<std::string> parent(const std::string& label) const;
  bool knows(const std::string& label) const;
  std::size_t size() const { return parent_.size(); }

  static LabelHierarchy from_json_text(std::string_view text);
  static LabelHierarchy load_json(const std::filesystem::path& path);

 private:
  std::unordered_map<std::string, std::string> parent_;
};

struct ResolvedWord {
  std::string token;
  Vector vector;
  std::size_t hops = 0;
};

/// Walks the parent chain starting at `token` itself until a table hit.
/// Throws UnresolvableLabel when the chain ends without a hit and
/// HierarchyCycle when a label repeats.
ResolvedWord resolve_with_fallback(const WordEmbeddingTable& table, const LabelHierarchy& hierarchy,
                                   const std::string& token);

/// Unit-norm 768-vector seeded from the FNV-1a hash of the text bytes.
Vector stub_sentence_vector(std::string_view text);

class SentenceEmbedder {
 public:
  enum class Kind { Precomputed, Stub };

  static SentenceEmbedder stub();
  static SentenceEmbedder precomputed(std::unordered_map<std::string, Vector> table);
  /// JSON map { "<exact text>": [768 floats] }.
  static SentenceEmbedder load_precomputed(const std::filesystem::path& path);

  Kind kind() const { return kind_; }

  /// Throws EmptyText for blank input, MissingPrecomputedEntry when a
  /// precomputed table lacks the exact text.
  Vector embed(std::string_view text) const;

 private:
  Kind kind_ = Kind::Stub;
  std::unordered_map<std::string, Vector> table_;
};

}  // namespace vtmm
