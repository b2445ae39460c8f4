// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "envsynth/protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>
#include <vector>

namespace envsynth {

namespace {

struct ProtocolFault {
  int code;
  std::string message;
};

Json error_response(const Json& id, int code, const std::string& message,
                    const Json& data = nullptr) {
  Json err = {{"code", code}, {"message", message}};
  if (!data.is_null()) err["data"] = data;
  return {{"id", id}, {"error", std::move(err)}};
}

const Json& params_of(const Json& request) {
  static const Json kEmpty = Json::object();
  auto it = request.find("params");
  if (it == request.end() || it->is_null()) return kEmpty;
  if (!it->is_object()) throw ProtocolFault{kInvalidRequestCode, "params must be a record"};
  return *it;
}

std::string client_of(const Json& request) {
  auto it = request.find("client_id");
  if (it == request.end() || !it->is_string()) {
    throw ProtocolFault{kInvalidRequestCode, "client_id must be a string"};
  }
  return it->get<std::string>();
}

std::string string_param(const Json& params, const char* name) {
  auto it = params.find(name);
  if (it == params.end() || !it->is_string()) {
    throw ToolError(Fault::InvalidArgs, std::string("params.") + name + " must be a string");
  }
  return it->get<std::string>();
}

Json dispatch(Runtime& runtime, const std::string& method, const Json& request) {
  const Json& params = params_of(request);
  if (method == "session/create") {
    runtime.create_session(client_of(request), string_param(params, "env"));
    return nullptr;
  }
  if (method == "session/destroy") {
    runtime.destroy_session(client_of(request));
    return nullptr;
  }
  if (method == "tools/list") {
    if (params.contains("env")) return runtime.list_tools(string_param(params, "env"));
    return runtime.list_tools(runtime.session_environment(client_of(request)));
  }
  if (method == "tools/call") {
    Json args = params.value("arguments", Json::object());
    return runtime.call_tool(client_of(request), string_param(params, "name"), args);
  }
  if (method == "load_scenario") {
    auto it = params.find("scenario");
    if (it == params.end()) throw ToolError(Fault::InvalidArgs, "params.scenario is required");
    runtime.load_scenario(client_of(request), *it);
    return nullptr;
  }
  if (method == "save_scenario") return runtime.save_scenario(client_of(request));
  throw ProtocolFault{kUnknownMethodCode, "unknown method '" + method + "'"};
}

}  // namespace

Json handle_request(Runtime& runtime, const Json& request) {
  if (!request.is_object()) return error_response(nullptr, kInvalidRequestCode, "request must be a record");
  Json id = request.value("id", Json());
  auto method = request.find("method");
  if (method == request.end() || !method->is_string()) {
    return error_response(id, kInvalidRequestCode, "method must be a string");
  }
  try {
    return {{"id", id}, {"result", dispatch(runtime, method->get<std::string>(), request)}};
  } catch (const ProtocolFault& f) {
    return error_response(id, f.code, f.message);
  } catch (const ToolError& e) {
    return error_response(id, e.code(), e.what(), e.data());
  } catch (const RemoteError& e) {
    return error_response(id, static_cast<int>(ErrorCode::Business), e.what());
  } catch (const std::exception& e) {
    return error_response(id, kInvalidRequestCode, e.what());
  }
}

std::string handle_request_line(Runtime& runtime, std::string_view line) {
  Json request = Json::parse(line.begin(), line.end(), nullptr, false);
  if (request.is_discarded()) return error_response(nullptr, kParseErrorCode, "malformed request line").dump();
  return handle_request(runtime, request).dump();
}

void serve_stream(Runtime& runtime, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out << handle_request_line(runtime, line) << '\n' << std::flush;
  }
}

TcpServer::TcpServer(Runtime& runtime, const std::string& host, std::uint16_t port)
    : runtime_(runtime) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  std::string service = std::to_string(port);
  if (int rc = getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw BindError("cannot resolve " + host + ": " + gai_strerror(rc));
  }
  int fd = socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    freeaddrinfo(res);
    throw BindError(std::string("socket: ") + std::strerror(errno));
  }
  int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (bind(fd, res->ai_addr, res->ai_addrlen) != 0 || listen(fd, 64) != 0) {
    std::string why = std::strerror(errno);
    freeaddrinfo(res);
    close(fd);
    throw BindError("cannot listen on " + host + ":" + service + ": " + why);
  }
  freeaddrinfo(res);
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  listen_fd_ = fd;
  port_ = ntohs(bound.sin_port);
}

TcpServer::~TcpServer() {
  if (listen_fd_ >= 0) close(listen_fd_);
}

void TcpServer::run(const std::atomic<bool>* external_stop) {
  auto should_stop = [&] { return stopping_ || (external_stop && *external_stop); };
  std::vector<std::thread> workers;
  while (!should_stop()) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    int rc = poll(&pfd, 1, 100);
    if (rc <= 0 || !(pfd.revents & POLLIN)) continue;
    int conn = accept(listen_fd_, nullptr, nullptr);
    if (conn < 0) continue;
    workers.emplace_back([this, conn] { serve_connection(conn); });
  }
  stopping_ = true;
  for (auto& t : workers) t.join();
}

void TcpServer::serve_connection(int fd) {
  std::string buffer;
  char chunk[4096];
  bool open = true;
  while (open && !stopping_) {
    pollfd pfd{fd, POLLIN, 0};
    if (poll(&pfd, 1, 100) <= 0) continue;
    ssize_t n = recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::string reply = handle_request_line(runtime_, line) + "\n";
      for (std::size_t sent = 0; sent < reply.size();) {
        ssize_t w = send(fd, reply.data() + sent, reply.size() - sent, MSG_NOSIGNAL);
        if (w <= 0) {
          open = false;
          break;
        }
        sent += static_cast<std::size_t>(w);
      }
      if (!open) break;
    }
  }
  close(fd);
}

}  // namespace envsynth
