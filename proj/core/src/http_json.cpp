#include "http_json.hpp"

#include <cstdlib>

#include "httplib.h"
#include "synthbias/error.hpp"

namespace synthbias {

std::string Endpoint::origin() const {
  return scheme + "://" + host + ":" + std::to_string(port);
}

Endpoint parse_endpoint(std::string_view url) {
  Endpoint ep;
  const auto sep = url.find("://");
  if (sep == std::string_view::npos) throw ArgumentError("endpoint '" + std::string(url) + "' has no scheme");
  ep.scheme = std::string(url.substr(0, sep));
  if (ep.scheme != "http" && ep.scheme != "https") {
    throw ArgumentError("endpoint '" + std::string(url) + "' must use http or https");
  }
  std::string_view rest = url.substr(sep + 3);
  const auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  ep.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (authority.empty()) throw ArgumentError("endpoint '" + std::string(url) + "' has no host");
  const auto colon = authority.rfind(':');
  if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
    ep.host = std::string(authority.substr(0, colon));
    const std::string port(authority.substr(colon + 1));
    char* end = nullptr;
    const long p = std::strtol(port.c_str(), &end, 10);
    if (port.empty() || *end != '\0' || p <= 0 || p > 65535) {
      throw ArgumentError("endpoint '" + std::string(url) + "' has an invalid port");
    }
    ep.port = static_cast<int>(p);
  } else {
    ep.host = std::string(authority);
    ep.port = ep.scheme == "https" ? 443 : 80;
  }
  if (ep.host.empty()) throw ArgumentError("endpoint '" + std::string(url) + "' has no host");
  return ep;
}

namespace detail {

HttpResult post_json(const Endpoint& endpoint, const std::string& body,
                     const std::string& bearer_token, std::chrono::milliseconds timeout) {
  httplib::Client client(endpoint.origin());
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  HttpResult result;
  auto res = client.Post(endpoint.path, headers, body, "application/json");
  if (!res) {
    result.error = httplib::to_string(res.error());
    return result;
  }
  result.status = res->status;
  result.body = res->body;
  return result;
}

std::string token_from_env(const std::string& env_name) {
  if (env_name.empty()) return {};
  const char* v = std::getenv(env_name.c_str());
  return v ? std::string(v) : std::string();
}

}  // namespace detail
}  // namespace synthbias
