// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "envsynth/errors.hpp"
#include "envsynth/runtime.hpp"

namespace envsynth {

// Codes for malformed protocol traffic, distinct from tool-level codes.
inline constexpr int kParseErrorCode = -32700;
inline constexpr int kInvalidRequestCode = -32600;
inline constexpr int kUnknownMethodCode = -32601;

class BindError : public Error {
 public:
  using Error::Error;
};

/// Maps one request line to one response line (no trailing newline). Never
/// throws for bad input; every failure becomes an error response.
///
/// Request:  {id, client_id, method, params}
/// Response: {id, result} | {id, error: {code, message, data?}}
std::string handle_request_line(Runtime& runtime, std::string_view line);

/// Structured form of the same dispatch, for in-process callers.
Json handle_request(Runtime& runtime, const Json& request);

/// Serves requests line by line until EOF. Blank lines are skipped.
void serve_stream(Runtime& runtime, std::istream& in, std::ostream& out);

/// Line-delimited TCP server. Each accepted connection gets a thread; all
/// connections share the runtime, with routing by client_id.
class TcpServer {
 public:
  /// Binds and listens on host:port; port 0 picks a free port. Throws
  /// BindError.
  TcpServer(Runtime& runtime, const std::string& host, std::uint16_t port);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }

  /// Accepts until stop() is called or `external_stop` becomes true, then
  /// waits for open connections to finish.
  void run(const std::atomic<bool>* external_stop = nullptr);
  void stop() noexcept { stopping_ = true; }

 private:
  void serve_connection(int fd);

  Runtime& runtime_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
};

}  // namespace envsynth
