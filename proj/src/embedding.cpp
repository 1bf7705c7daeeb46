#include "rxnelicit/embedding.hpp"

#include <cmath>
#include <limits>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rxnelicit/binary_io.hpp"
#include "rxnelicit/error.hpp"
#include "rxnelicit/smiles.hpp"
#include "rxnelicit/util.hpp"
#include "service_url.hpp"

namespace rxnelicit::embed {

std::string_view encoding_name(EncodingMethod m) {
  switch (m) {
  case EncodingMethod::kOutputOnly:
    return "output";
  case EncodingMethod::kOutputMinusInput:
    return "output-input";
  case EncodingMethod::kConcat:
    return "concat";
  case EncodingMethod::kElementwiseProduct:
    return "product";
  }
  return "?";
}

std::optional<EncodingMethod> parse_encoding(std::string_view name) {
  for (auto m : kAllEncodings)
    if (encoding_name(m) == name)
      return m;
  return std::nullopt;
}

std::size_t composed_dim(EncodingMethod m, std::size_t dim) {
  return m == EncodingMethod::kConcat ? 2 * dim : dim;
}

Vector compose(EncodingMethod m, const Vector &input, const Vector &output) {
  if (input.size() != output.size())
    throw DataError("compose: dimension mismatch (" +
                    std::to_string(input.size()) + " vs " +
                    std::to_string(output.size()) + ")");
  const std::size_t d = input.size();
  Vector out;
  switch (m) {
  case EncodingMethod::kOutputOnly:
    out = output;
    break;
  case EncodingMethod::kOutputMinusInput:
    out.resize(d);
    for (std::size_t i = 0; i < d; ++i)
      out[i] = output[i] - input[i];
    break;
  case EncodingMethod::kConcat:
    out.reserve(2 * d);
    out.insert(out.end(), input.begin(), input.end());
    out.insert(out.end(), output.begin(), output.end());
    break;
  case EncodingMethod::kElementwiseProduct:
    out.resize(d);
    for (std::size_t i = 0; i < d; ++i)
      out[i] = output[i] * input[i];
    break;
  }
  return out;
}

Vector hash_embed(std::string_view text, std::size_t dim) {
  if (dim < 2)
    throw ConfigError("hash embedding dim must be >= 2");
  Vector v(dim, 0.0);
  const auto tokens = smiles::regex_tokens(text);
  auto add = [&](const std::string &feature) {
    const auto h = bucket_hash(feature);
    v[h % dim] += (h >> 63) ? -1.0 : 1.0;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add("u:" + tokens[i]);
    if (i + 1 < tokens.size())
      add("b:" + tokens[i] + " " + tokens[i + 1]);
  }
  double norm = 0.0;
  for (double x : v)
    norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double &x : v)
      x /= norm;
  }
  return v;
}

std::string embedding_key(std::string_view record_id, std::string_view field) {
  std::string key(record_id);
  key += ':';
  key += field;
  return key;
}

std::string template_key(data::TaskType task, std::size_t index) {
  return "template:" + std::string(data::task_name(task)) + ":" +
         std::to_string(index);
}

std::vector<Vector> Provider::embed_texts(
    std::span<const std::string> texts) const {
  std::vector<EmbedItem> items;
  items.reserve(texts.size());
  for (const auto &t : texts)
    items.push_back({t, t});
  return embed(items);
}

HashProvider::HashProvider(std::size_t dim) : dim_(dim) {
  if (dim < 2)
    throw ConfigError("hash provider dim must be >= 2");
}

std::vector<Vector> HashProvider::embed(std::span<const EmbedItem> items) const {
  std::vector<Vector> out;
  out.reserve(items.size());
  for (const auto &item : items)
    out.push_back(hash_embed(item.text, dim_));
  return out;
}

// --- EMBS store ----------------------------------------------------------

namespace {
constexpr std::string_view kStoreMagic = "EMBS";
constexpr std::uint32_t kStoreVersion = 1;
}  // namespace

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
  if (dim == 0 || dim > std::numeric_limits<std::uint32_t>::max())
    throw DataError("embedding store dim must be positive");
}

void EmbeddingStore::put(std::string key, std::span<const float> values) {
  if (values.size() != dim_)
    throw DataError("embedding \"" + key + "\" has length " +
                    std::to_string(values.size()) + ", store dim is " +
                    std::to_string(dim_));
  if (key.size() > std::numeric_limits<std::uint16_t>::max())
    throw DataError("embedding key longer than 65535 bytes");
  for (float x : values)
    if (!std::isfinite(x))
      throw DataError("embedding \"" + key + "\" has a non-finite value");
  std::vector<float> v(values.begin(), values.end());
  if (auto it = index_.find(key); it != index_.end()) {
    entries_[it->second].second = std::move(v);
    return;
  }
  index_.emplace(key, entries_.size());
  entries_.emplace_back(std::move(key), std::move(v));
}

void EmbeddingStore::put(std::string key, const Vector &values) {
  std::vector<float> f(values.begin(), values.end());
  put(std::move(key), std::span<const float>(f));
}

const std::vector<float> *EmbeddingStore::find(std::string_view key) const {
  auto it = index_.find(std::string(key));
  return it == index_.end() ? nullptr : &entries_[it->second].second;
}

EmbeddingStore EmbeddingStore::parse(std::string_view bytes,
                                     const std::string &context) {
  binio::Reader in(bytes, context);
  in.expect_magic(kStoreMagic);
  if (auto v = in.u32(); v != kStoreVersion)
    throw DataError(context + ": unsupported version " + std::to_string(v));
  const std::uint32_t dim = in.u32();
  const std::uint64_t count = in.u64();
  EmbeddingStore store(dim);
  std::vector<float> values(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint16_t key_len = in.u16();
    std::string key(in.take(key_len));
    for (std::uint32_t j = 0; j < dim; ++j)
      values[j] = in.f32();
    if (store.find(key))
      throw DataError(context + ": duplicate key \"" + key + "\"");
    store.put(std::move(key), std::span<const float>(values));
  }
  if (!in.at_end())
    throw DataError(context + ": trailing bytes after " +
                    std::to_string(count) + " records");
  return store;
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path &path) {
  return parse(binio::read_file(path), path.string());
}

std::string EmbeddingStore::serialize() const {
  binio::Writer out;
  out.magic(kStoreMagic);
  out.u32(kStoreVersion);
  out.u32(static_cast<std::uint32_t>(dim_));
  out.u64(entries_.size());
  for (const auto &[key, values] : entries_) {
    out.u16(static_cast<std::uint16_t>(key.size()));
    out.raw(key);
    for (float x : values)
      out.f32(x);
  }
  return out.bytes();
}

void EmbeddingStore::save(const std::filesystem::path &path) const {
  binio::write_file(path, serialize());
}

StoreProvider::StoreProvider(std::shared_ptr<const EmbeddingStore> store)
    : store_(std::move(store)) {
  if (!store_)
    throw ConfigError("store provider needs a store");
}

std::vector<Vector> StoreProvider::embed(std::span<const EmbedItem> items) const {
  std::vector<Vector> out;
  out.reserve(items.size());
  for (const auto &item : items) {
    const auto *v = store_->find(item.key);
    if (!v)
      throw DataError("missing embedding key \"" + item.key + "\"");
    out.emplace_back(v->begin(), v->end());
  }
  return out;
}

// --- HTTP ----------------------------------------------------------------

using detail::split_url;

HttpProvider::HttpProvider(std::string base_url, std::size_t dim,
                           HttpOptions opts)
    : dim_(dim), opts_(opts) {
  if (dim == 0)
    throw ConfigError("http provider dim must be positive");
  if (opts_.batch_size == 0)
    throw ConfigError("http provider batch size must be positive");
  std::tie(host_, path_prefix_) = split_url(base_url);
}

std::vector<Vector> HttpProvider::embed(std::span<const EmbedItem> items) const {
  std::vector<Vector> out;
  out.reserve(items.size());
  for (std::size_t start = 0; start < items.size(); start += opts_.batch_size) {
    const auto n = std::min(opts_.batch_size, items.size() - start);
    auto batch = embed_batch(items.subspan(start, n));
    for (auto &v : batch)
      out.push_back(std::move(v));
  }
  return out;
}

std::vector<Vector> HttpProvider::embed_batch(
    std::span<const EmbedItem> items) const {
  nlohmann::json body;
  body["texts"] = nlohmann::json::array();
  for (const auto &item : items)
    body["texts"].push_back(item.text);
  const std::string payload = body.dump();
  const std::string path = path_prefix_ + "/embed";

  httplib::Client client(host_);
  client.set_connection_timeout(opts_.timeout);
  client.set_read_timeout(opts_.timeout);
  client.set_write_timeout(opts_.timeout);

  std::string last_error;
  auto backoff = opts_.initial_backoff;
  for (int attempt = 0; attempt <= opts_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(path, payload, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "embedding service returned HTTP " +
                   std::to_string(res->status);
      if (res->status >= 500)
        continue;
      throw BackendError(last_error);
    }

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error &e) {
      throw BackendError(std::string("embedding service sent malformed JSON: ") +
                         e.what());
    }
    if (!reply.contains("dim") || !reply.contains("vectors"))
      throw BackendError("embedding service reply lacks dim/vectors");
    const auto dim = reply["dim"].get<std::size_t>();
    if (dim != dim_)
      throw BackendError("embedding dimension mismatch: service returned " +
                         std::to_string(dim) + ", provider declares " +
                         std::to_string(dim_));
    const auto &vecs = reply["vectors"];
    if (!vecs.is_array() || vecs.size() != items.size())
      throw BackendError("embedding service returned " +
                         std::to_string(vecs.is_array() ? vecs.size() : 0) +
                         " vectors for " + std::to_string(items.size()) +
                         " texts");
    std::vector<Vector> out;
    out.reserve(items.size());
    for (const auto &v : vecs) {
      auto vec = v.get<Vector>();
      if (vec.size() != dim_)
        throw BackendError("embedding dimension mismatch in vector of length " +
                           std::to_string(vec.size()));
      for (double x : vec)
        if (!std::isfinite(x))
          throw BackendError("embedding service returned a non-finite value");
      out.push_back(std::move(vec));
    }
    return out;
  }
  throw BackendError(last_error);
}

}  // namespace rxnelicit::embed
