#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rxnelicit/dataset.hpp"

namespace rxnelicit::embed {

using Vector = std::vector<double>;

enum class EncodingMethod : std::uint8_t {
  kOutputOnly = 0,
  kOutputMinusInput = 1,
  kConcat = 2,
  kElementwiseProduct = 3,
};

inline constexpr std::array<EncodingMethod, 4> kAllEncodings = {
    EncodingMethod::kOutputOnly, EncodingMethod::kOutputMinusInput,
    EncodingMethod::kConcat, EncodingMethod::kElementwiseProduct};

// "output", "output-input", "concat", "product"
std::string_view encoding_name(EncodingMethod m);
std::optional<EncodingMethod> parse_encoding(std::string_view name);

std::size_t composed_dim(EncodingMethod m, std::size_t dim);

// Combines the input and output embeddings of one reaction. The product
// variant is elementwise so the result stays a clusterable vector.
Vector compose(EncodingMethod m, const Vector &input, const Vector &output);

// Signed feature hashing over SMILES tokens and token bigrams, then L2
// normalization (an all-zero vector is returned as is).
Vector hash_embed(std::string_view text, std::size_t dim);

// "{record_id}:{field}" with field in {input, output, instruction}.
std::string embedding_key(std::string_view record_id, std::string_view field);
// "template:{task}:{index}"
std::string template_key(data::TaskType task, std::size_t index);

struct EmbedItem {
  std::string key;
  std::string text;
};

// Uniform embedding contract. Implementations are safe to share across
// threads.
class Provider {
 public:
  virtual ~Provider() = default;

  virtual std::size_t dim() const = 0;

  // One vector per item, in order, each of length dim().
  virtual std::vector<Vector> embed(std::span<const EmbedItem> items) const = 0;

  // Convenience: key == text.
  std::vector<Vector> embed_texts(std::span<const std::string> texts) const;
};

class HashProvider final : public Provider {
 public:
  explicit HashProvider(std::size_t dim);

  std::size_t dim() const override { return dim_; }
  std::vector<Vector> embed(std::span<const EmbedItem> items) const override;

 private:
  std::size_t dim_;
};

// In-memory form of the "EMBS" binary store. Entry order is preserved so a
// load/save cycle reproduces the file byte for byte.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }

  // Adds or replaces an entry. Throws DataError on a length mismatch or
  // non-finite value.
  void put(std::string key, std::span<const float> values);
  void put(std::string key, const Vector &values);

  const std::vector<float> *find(std::string_view key) const;

  const std::vector<std::pair<std::string, std::vector<float>>> &entries()
      const noexcept {
    return entries_;
  }

  static EmbeddingStore parse(std::string_view bytes,
                              const std::string &context = "EMBS");
  static EmbeddingStore load(const std::filesystem::path &path);

  std::string serialize() const;
  void save(const std::filesystem::path &path) const;

 private:
  std::size_t dim_;
  std::vector<std::pair<std::string, std::vector<float>>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Looks items up by key in a read-only store.
class StoreProvider final : public Provider {
 public:
  explicit StoreProvider(std::shared_ptr<const EmbeddingStore> store);

  std::size_t dim() const override { return store_->dim(); }
  std::vector<Vector> embed(std::span<const EmbedItem> items) const override;

 private:
  std::shared_ptr<const EmbeddingStore> store_;
};

struct HttpOptions {
  std::size_t batch_size = 64;
  int retries = 3;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::seconds timeout{120};
};

// POST {base}/embed {"texts": [...]} -> {"dim": d, "vectors": [[...]]}.
class HttpProvider final : public Provider {
 public:
  HttpProvider(std::string base_url, std::size_t dim, HttpOptions opts = {});

  std::size_t dim() const override { return dim_; }
  std::vector<Vector> embed(std::span<const EmbedItem> items) const override;

 private:
  std::vector<Vector> embed_batch(std::span<const EmbedItem> items) const;

  std::string host_;
  std::string path_prefix_;
  std::size_t dim_;
  HttpOptions opts_;
};

}  // namespace rxnelicit::embed
