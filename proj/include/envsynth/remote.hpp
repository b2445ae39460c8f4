// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "envsynth/model.hpp"

namespace envsynth {

/// `http://host[:port]/path` split into its parts.
struct HttpUrl {
  std::string host;
  int port = 80;
  std::string path = "/";
};

/// Throws RemoteError for anything that is not a plain http URL.
HttpUrl parse_http_url(const std::string& url);

/// POSTs `body` as JSON and returns the decoded JSON reply. Connection
/// failures, non-2xx statuses and undecodable replies throw RemoteError.
Json post_json(const std::string& url, const Json& body,
               std::chrono::milliseconds timeout = std::chrono::seconds(10));

/// Value of environment variable `var` when set and non-empty, else `fallback`.
std::optional<std::string> endpoint_override(const char* var,
                                             std::optional<std::string> fallback);

}  // namespace envsynth
