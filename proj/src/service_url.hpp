#pragma once

#include <string>
#include <utility>

#include "rxnelicit/error.hpp"

namespace rxnelicit::detail {

// Splits "http://host:port/prefix" into ("http://host:port", "/prefix").
inline std::pair<std::string, std::string> split_url(const std::string &url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos)
    throw ConfigError("service URL must start with http://, got \"" + url + "\"");
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos)
    return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/')
    prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

}  // namespace rxnelicit::detail
