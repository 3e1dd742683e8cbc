#include "vtmm/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "vtmm/error.hpp"
#include "vtmm/rng.hpp"

namespace vtmm {

namespace {

bool is_blank(std::string_view text) {
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, path.string() + ": " + e.what());
  }
}

}  // namespace

void WordEmbeddingTable::insert(std::string token, Vector values) {
  if (values.size() != kWordDim) {
    throw Error(Errc::DimensionMismatch, "word vector for '" + token + "' has " +
                                             std::to_string(values.size()) + " values, expected " +
                                             std::to_string(kWordDim));
  }
  entries_.insert_or_assign(std::move(token), std::move(values));
}

const Vector* WordEmbeddingTable::find(std::string_view token) const {
  auto it = entries_.find(token);
  return it == entries_.end() ? nullptr : &it->second;
}

WordEmbeddingTable WordEmbeddingTable::parse_glove(std::istream& in) {
  WordEmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    Vector values;
    values.reserve(kWordDim);
    double v = 0.0;
    while (fields >> v) values.push_back(v);
    if (!fields.eof()) {
      throw Error(Errc::InvalidArgument, "glove line " + std::to_string(line_no) + ": non-numeric value");
    }
    if (values.size() != kWordDim) {
      throw Error(Errc::DimensionMismatch, "glove line " + std::to_string(line_no) + ": expected " +
                                               std::to_string(kWordDim) + " values, got " +
                                               std::to_string(values.size()));
    }
    table.insert(std::move(token), std::move(values));
  }
  return table;
}

WordEmbeddingTable WordEmbeddingTable::load_glove(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return parse_glove(in);
}

std::optional<Vector> lookup_word(const WordEmbeddingTable& table, std::string_view token) {
  if (const Vector* v = table.find(token)) return *v;
  return std::nullopt;
}

void LabelHierarchy::set_parent(std::string child, std::string parent) {
  parent_.insert_or_assign(std::move(child), std::move(parent));
}

std::optional<std::string> LabelHierarchy::parent(const std::string& label) const {
  auto it = parent_.find(label);
  if (it == parent_.end()) return std::nullopt;
  return it->second;
}

bool LabelHierarchy::knows(const std::string& label) const {
  if (parent_.contains(label)) return true;
  for (const auto& [child, parent] : parent_) {
    if (parent == label) return true;
  }
  return false;
}

LabelHierarchy LabelHierarchy::from_json_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("hierarchy: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::InvalidArgument, "hierarchy must be a JSON object");
  LabelHierarchy h;
  for (const auto& [child, parent] : doc.items()) {
    if (!parent.is_string()) throw Error(Errc::InvalidArgument, "hierarchy parent of '" + child + "' is not a string");
    h.set_parent(child, parent.get<std::string>());
  }
  return h;
}

LabelHierarchy LabelHierarchy::load_json(const std::filesystem::path& path) {
  return from_json_text(read_json_file(path).dump());
}

ResolvedWord resolve_with_fallback(const WordEmbeddingTable& table, const LabelHierarchy& hierarchy,
                                   const std::string& token) {
  std::unordered_set<std::string> visited;
  std::string current = token;
  std::size_t hops = 0;
  while (true) {
    if (const Vector* v = table.find(current)) return {current, *v, hops};
    if (!visited.insert(current).second) {
      throw Error(Errc::HierarchyCycle, "label hierarchy cycle through '" + current + "'");
    }
    auto parent = hierarchy.parent(current);
    if (!parent) {
      throw Error(Errc::UnresolvableLabel,
                  "no word vector for '" + token + "' or any ancestor (chain ended at '" + current + "')");
    }
    current = std::move(*parent);
    ++hops;
  }
}

Vector stub_sentence_vector(std::string_view text) {
  Rng rng(fnv1a64(text));
  Vector v(kSentenceDim);
  double norm2 = 0.0;
  for (double& x : v) {
    x = rng.uniform(-1.0, 1.0);
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

SentenceEmbedder SentenceEmbedder::stub() { return SentenceEmbedder{}; }

SentenceEmbedder SentenceEmbedder::precomputed(std::unordered_map<std::string, Vector> table) {
  for (const auto& [text, v] : table) {
    if (v.size() != kSentenceDim) {
      throw Error(Errc::DimensionMismatch, "sentence vector for '" + text + "' has " + std::to_string(v.size()) +
                                               " values, expected " + std::to_string(kSentenceDim));
    }
  }
  SentenceEmbedder e;
  e.kind_ = Kind::Precomputed;
  e.table_ = std::move(table);
  return e;
}

SentenceEmbedder SentenceEmbedder::load_precomputed(const std::filesystem::path& path) {
  const auto doc = read_json_file(path);
  if (!doc.is_object()) throw Error(Errc::InvalidArgument, path.string() + ": expected a JSON object");
  std::unordered_map<std::string, Vector> table;
  for (const auto& [text, values] : doc.items()) table.emplace(text, values.get<Vector>());
  return precomputed(std::move(table));
}

Vector SentenceEmbedder::embed(std::string_view text) const {
  if (is_blank(text)) throw Error(Errc::EmptyText, "cannot embed empty text");
  if (kind_ == Kind::Stub) return stub_sentence_vector(text);
  auto it = table_.find(std::string(text));
  if (it == table_.end()) {
    throw Error(Errc::MissingPrecomputedEntry,
                "no precomputed sentence vector for '" + std::string(text) + "'; regenerate the embeddings file");
  }
  return it->second;
}

}  // namespace vtmm
