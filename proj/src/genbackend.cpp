#include "rxnelicit/genbackend.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rxnelicit/error.hpp"
#include "service_url.hpp"

namespace rxnelicit::gen {

void check_request(const GenerationRequest &req) {
  if (req.prompts.empty())
    throw ConfigError("generation request has no prompts");
  if (req.max_new_tokens <= 0)
    throw ConfigError("max_new_tokens must be positive");
  if (!(req.temperature >= 0.0) || !std::isfinite(req.temperature))
    throw ConfigError("temperature must be a non-negative number");
}

std::vector<std::string> EchoBackend::generate(
    const GenerationRequest &req) const {
  check_request(req);
  constexpr std::string_view kMarker = "input: ";
  std::vector<std::string> out;
  out.reserve(req.prompts.size());
  for (const auto &p : req.prompts) {
    auto at = p.rfind(kMarker);
    out.push_back(at == std::string::npos ? p : p.substr(at + kMarker.size()));
  }
  return out;
}

HttpBackend::HttpBackend(std::string base_url, HttpGenOptions opts)
    : opts_(opts) {
  if (opts_.batch_size == 0)
    throw ConfigError("generation batch size must be positive");
  std::tie(host_, path_prefix_) = detail::split_url(base_url);
}

std::vector<std::string> HttpBackend::generate(
    const GenerationRequest &req) const {
  check_request(req);
  std::vector<std::string> out;
  out.reserve(req.prompts.size());
  for (std::size_t start = 0; start < req.prompts.size();
       start += opts_.batch_size) {
    const auto n = std::min(opts_.batch_size, req.prompts.size() - start);
    for (auto &s : generate_batch(req, start, n))
      out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> HttpBackend::generate_batch(
    const GenerationRequest &req, std::size_t start, std::size_t count) const {
  nlohmann::json body;
  body["prompts"] = std::vector<std::string>(
      req.prompts.begin() + start, req.prompts.begin() + start + count);
  body["max_new_tokens"] = req.max_new_tokens;
  body["temperature"] = req.temperature;
  const std::string payload = body.dump();

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
    auto res = client.Post(path_prefix_ + "/generate", payload,
                           "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "generation service returned HTTP " +
                   std::to_string(res->status);
      if (res->status >= 500)
        continue;
      throw BackendError(last_error);
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error &e) {
      throw BackendError(std::string("generation service sent malformed JSON: ") +
                         e.what());
    }
    auto it = reply.find("outputs");
    if (it == reply.end() || !it->is_array())
      throw BackendError("generation service reply lacks outputs");
    if (it->size() != count)
      throw BackendError("generation service returned " +
                         std::to_string(it->size()) + " outputs for " +
                         std::to_string(count) + " prompts");
    std::vector<std::string> out;
    out.reserve(count);
    for (const auto &o : *it) {
      if (!o.is_string())
        throw BackendError("generation service returned a non-string output");
      out.push_back(o.get<std::string>());
    }
    return out;
  }
  throw BackendError(last_error);
}

std::unique_ptr<Backend> make_backend(const std::string &spec) {
  if (spec == "echo")
    return std::make_unique<EchoBackend>();
  if (spec.starts_with("http:") && spec.find("://") != std::string::npos &&
      !spec.starts_with("http://"))
    return std::make_unique<HttpBackend>(spec.substr(5));
  if (spec.starts_with("http://"))
    return std::make_unique<HttpBackend>(spec);
  throw ConfigError("unknown generation backend \"" + spec +
                    "\" (expected echo or http:<url>)");
}

}  // namespace rxnelicit::gen
