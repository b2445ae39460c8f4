// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "envsynth/remote.hpp"

#include <cstdlib>

#include <httplib.h>

#include "envsynth/errors.hpp"

namespace envsynth {

HttpUrl parse_http_url(const std::string& url) {
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0) throw RemoteError("unsupported endpoint URL: " + url);
  std::string rest = url.substr(scheme.size());
  HttpUrl out;
  auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  if (slash != std::string::npos) out.path = rest.substr(slash);
  auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    out.host = authority.substr(0, colon);
    try {
      out.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw RemoteError("bad port in endpoint URL: " + url);
    }
  } else {
    out.host = authority;
  }
  if (out.host.empty()) throw RemoteError("missing host in endpoint URL: " + url);
  return out;
}

Json post_json(const std::string& url, const Json& body, std::chrono::milliseconds timeout) {
  HttpUrl target = parse_http_url(url);
  httplib::Client client(target.host, target.port);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  auto res = client.Post(target.path, body.dump(), "application/json");
  if (!res) {
    throw RemoteError("endpoint " + url + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw RemoteError("endpoint " + url + " returned HTTP " + std::to_string(res->status));
  }
  try {
    return Json::parse(res->body);
  } catch (const Json::parse_error& e) {
    throw RemoteError("endpoint " + url + " returned invalid JSON: " + e.what());
  }
}

std::optional<std::string> endpoint_override(const char* var,
                                             std::optional<std::string> fallback) {
  if (const char* v = std::getenv(var); v != nullptr && *v != '\0') return std::string(v);
  return fallback;
}

}  // namespace envsynth
