#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

// Client side of the external text-generation service.
namespace rxnelicit::gen {

struct GenerationRequest {
  std::vector<std::string> prompts;
  int max_new_tokens = 256;
  double temperature = 0.0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // One output per prompt, in prompt order. Throws ConfigError on an
  // invalid request and BackendError on service failures.
  virtual std::vector<std::string> generate(const GenerationRequest &req) const = 0;
};

// Offline double: returns the text after the last "input: " of each
// prompt (the whole prompt when the marker is absent).
class EchoBackend final : public Backend {
 public:
  std::vector<std::string> generate(const GenerationRequest &req) const override;
};

struct HttpGenOptions {
  std::size_t batch_size = 32;
  int retries = 2;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{120};
};

// POST {base}/generate {"prompts", "max_new_tokens", "temperature"}
//   -> {"outputs": [...]}
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(std::string base_url, HttpGenOptions opts = {});
  std::vector<std::string> generate(const GenerationRequest &req) const override;

 private:
  std::vector<std::string> generate_batch(const GenerationRequest &req,
                                          std::size_t start,
                                          std::size_t count) const;
  std::string host_;
  std::string path_prefix_;
  HttpGenOptions opts_;
};

// "echo" or "http:<url>".
std::unique_ptr<Backend> make_backend(const std::string &spec);

void check_request(const GenerationRequest &req);

}  // namespace rxnelicit::gen
