#pragma once

#include <chrono>
#include <string>

#include "synthbias/endpoint.hpp"

namespace synthbias::detail {

struct HttpResult {
  int status = 0;       // 0 when no HTTP response arrived
  std::string body;
  std::string error;    // transport error description
  bool ok() const { return status >= 200 && status < 300; }
};

HttpResult post_json(const Endpoint& endpoint, const std::string& body,
                     const std::string& bearer_token, std::chrono::milliseconds timeout);

// Value of the named environment variable, or empty when unset or unnamed.
std::string token_from_env(const std::string& env_name);

}  // namespace synthbias::detail
