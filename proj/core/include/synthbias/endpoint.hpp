#pragma once

#include <string>
#include <string_view>

namespace synthbias {

// http(s)://host[:port]/path, split for the HTTP client.
struct Endpoint {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;

  // "scheme://host:port"
  std::string origin() const;
};

// Throws ArgumentError when `url` is not an absolute http/https URL.
Endpoint parse_endpoint(std::string_view url);

}  // namespace synthbias
