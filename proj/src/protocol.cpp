// Copyright 2026 The EI Explain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ei/protocol.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include "ei/errors.hpp"
#include "json.hpp"

namespace ei {
namespace protocol {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

namespace {

json ParseLine(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(ProtocolError::Kind::kMalformed,
                        std::string("ei-predict: unparseable line: ") +
                            e.what());
  }
}

[[noreturn]] void Malformed(const std::string& what) {
  throw ProtocolError(ProtocolError::Kind::kMalformed, "ei-predict: " + what);
}

TaskKind TaskField(const json& doc) {
  if (!doc.contains("task") || !doc["task"].is_string()) {
    Malformed("missing \"task\"");
  }
  try {
    return ParseTaskKind(doc["task"].get<std::string>());
  } catch (const InvalidArgument& e) {
    Malformed(e.what());
  }
}

}  // namespace

std::string EncodeHello(TaskKind task) {
  ordered_json j;
  j["protocol"] = kVersion;
  j["task"] = TaskName(task);
  return j.dump();
}

std::string EncodeHelloReply(TaskKind task, bool concurrent) {
  ordered_json j;
  j["protocol"] = kVersion;
  j["task"] = TaskName(task);
  j["concurrent"] = concurrent;
  return j.dump();
}

std::string EncodeRequest(std::uint64_t id, const TokenMatrix& rows,
                          TaskKind task) {
  ordered_json j;
  j["id"] = id;
  ordered_json arr = ordered_json::array();
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    auto row = rows.row(r);
    arr.push_back(std::vector<TokenId>(row.begin(), row.end()));
  }
  j["rows"] = std::move(arr);
  j["task"] = TaskName(task);
  return j.dump();
}

std::string EncodeResponse(std::uint64_t id, const PredictionBatch& outputs,
                           TaskKind task) {
  ordered_json j;
  j["id"] = id;
  ordered_json arr = ordered_json::array();
  for (std::size_t r = 0; r < outputs.rows(); ++r) {
    if (task == TaskKind::kRegression) {
      arr.push_back(outputs.scalar(r));
    } else {
      auto row = outputs.row(r);
      arr.push_back(std::vector<double>(row.begin(), row.end()));
    }
  }
  j["outputs"] = std::move(arr);
  return j.dump();
}

std::string EncodeErrorResponse(std::uint64_t id, std::string_view message) {
  ordered_json j;
  j["id"] = id;
  j["error"] = message;
  return j.dump();
}

std::string EncodeBye() { return R"({"bye":true})"; }

TaskKind DecodeHello(std::string_view line) {
  const json doc = ParseLine(line);
  if (!doc.is_object() || !doc.contains("protocol") ||
      !doc["protocol"].is_string()) {
    Malformed("hello without \"protocol\"");
  }
  if (doc["protocol"].get<std::string>() != kVersion) {
    throw ProtocolError(ProtocolError::Kind::kVersionMismatch,
                        "ei-predict: unsupported protocol '" +
                            doc["protocol"].get<std::string>() + "'");
  }
  return TaskField(doc);
}

std::optional<PredictRequest> DecodeRequest(std::string_view line) {
  const json doc = ParseLine(line);
  if (!doc.is_object()) Malformed("request is not an object");
  if (doc.contains("bye")) return std::nullopt;
  if (!doc.contains("id") || !doc["id"].is_number_unsigned()) {
    Malformed("request without integer \"id\"");
  }
  PredictRequest req;
  req.id = doc["id"].get<std::uint64_t>();
  req.task = TaskField(doc);
  if (!doc.contains("rows") || !doc["rows"].is_array() ||
      doc["rows"].empty()) {
    Malformed("request without rows");
  }
  for (const auto& row : doc["rows"]) {
    if (!row.is_array() || row.empty()) Malformed("row is not a non-empty array");
    std::vector<TokenId> ids;
    ids.reserve(row.size());
    for (const auto& v : row) {
      if (!v.is_number_unsigned()) Malformed("token index is not >= 0");
      ids.push_back(v.get<TokenId>());
    }
    req.rows.push_back(std::move(ids));
  }
  return req;
}

Capabilities DecodeHelloReply(std::string_view line) {
  const json doc = ParseLine(line);
  if (!doc.is_object() || !doc.contains("protocol") ||
      !doc["protocol"].is_string()) {
    Malformed("handshake reply without \"protocol\"");
  }
  Capabilities caps;
  caps.protocol = doc["protocol"].get<std::string>();
  if (caps.protocol != kVersion) {
    throw ProtocolError(ProtocolError::Kind::kVersionMismatch,
                        "ei-predict: server speaks '" + caps.protocol +
                            "', expected '" + std::string(kVersion) + "'");
  }
  caps.task = TaskField(doc);
  if (doc.contains("concurrent")) {
    if (!doc["concurrent"].is_boolean()) Malformed("\"concurrent\" not a bool");
    caps.concurrent = doc["concurrent"].get<bool>();
  }
  return caps;
}

std::optional<std::uint64_t> PeekResponseId(std::string_view line) {
  try {
    const json doc = json::parse(line);
    if (doc.is_object() && doc.contains("id") &&
        doc["id"].is_number_unsigned()) {
      return doc["id"].get<std::uint64_t>();
    }
  } catch (const json::parse_error&) {
  }
  return std::nullopt;
}

PredictionBatch DecodeResponse(std::string_view line, std::uint64_t expected_id,
                               std::size_t expected_rows, const Task& task) {
  const json doc = ParseLine(line);
  if (!doc.is_object()) Malformed("response is not an object");
  if (!doc.contains("id") || !doc["id"].is_number_unsigned()) {
    Malformed("response without integer \"id\"");
  }
  const auto id = doc["id"].get<std::uint64_t>();
  if (id != expected_id) {
    throw ProtocolError(ProtocolError::Kind::kIdMismatch,
                        "ei-predict: response id " + std::to_string(id) +
                            " does not match request id " +
                            std::to_string(expected_id));
  }
  if (doc.contains("error")) {
    throw ModelError("external model: " +
                     (doc["error"].is_string() ? doc["error"].get<std::string>()
                                               : doc["error"].dump()));
  }
  if (!doc.contains("outputs") || !doc["outputs"].is_array()) {
    Malformed("response without \"outputs\"");
  }
  const json& outputs = doc["outputs"];
  if (outputs.size() != expected_rows) {
    throw ProtocolError(ProtocolError::Kind::kLengthMismatch,
                        "ei-predict: " + std::to_string(outputs.size()) +
                            " outputs for " + std::to_string(expected_rows) +
                            " rows");
  }

  const std::size_t width = task.width();
  std::vector<double> values;
  values.reserve(expected_rows * width);
  for (std::size_t r = 0; r < outputs.size(); ++r) {
    const json& out = outputs[r];
    if (task.is_regression()) {
      if (!out.is_number()) Malformed("regression output is not a number");
      const double v = out.get<double>();
      if (!std::isfinite(v)) Malformed("regression output is not finite");
      values.push_back(v);
      continue;
    }
    if (!out.is_array() || out.size() != width) {
      throw ProtocolError(ProtocolError::Kind::kInvalidProbabilities,
                          "ei-predict: row " + std::to_string(r) +
                              " is not a vector of " + std::to_string(width) +
                              " probabilities");
    }
    double sum = 0.0;
    for (const auto& p : out) {
      if (!p.is_number()) Malformed("probability is not a number");
      const double v = p.get<double>();
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ProtocolError(ProtocolError::Kind::kInvalidProbabilities,
                            "ei-predict: probability outside [0,1] in row " +
                                std::to_string(r));
      }
      sum += v;
      values.push_back(v);
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ProtocolError(ProtocolError::Kind::kInvalidProbabilities,
                          "ei-predict: probabilities in row " +
                              std::to_string(r) + " sum to " +
                              std::to_string(sum));
    }
  }
  return PredictionBatch(width, std::move(values));
}

// ---------------------------------------------------------------------------
// Transports

FdTransport::FdTransport(int read_fd, int write_fd)
    : read_fd_(read_fd), write_fd_(write_fd) {}

FdTransport::~FdTransport() {
  Close();
  if (read_fd_ >= 0) ::close(read_fd_);
}

void FdTransport::WriteLine(std::string_view line) {
  if (write_fd_ < 0) throw TransportError("ei-predict: channel closed");
  std::string data(line);
  data.push_back('\n');
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + sent, data.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("ei-predict: write failed: ") +
                           std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string FdTransport::ReadLine(Millis timeout) {
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left =
        std::chrono::duration_cast<Millis>(deadline - Clock::now()).count();
    if (left <= 0) throw TransportError("ei-predict: timed out waiting for reply");
    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("ei-predict: poll failed: ") +
                           std::strerror(errno));
    }
    if (ready == 0) continue;
    char chunk[65536];
    const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw TransportError(std::string("ei-predict: read failed: ") +
                           std::strerror(errno));
    }
    if (n == 0) throw TransportError("ei-predict: peer closed the channel");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void FdTransport::Close() {
  if (write_fd_ >= 0) {
    ::close(write_fd_);
    write_fd_ = -1;
  }
}

ChildProcessTransport::ChildProcessTransport(
    const std::vector<std::string>& argv) {
  if (argv.empty()) throw InvalidArgument("ei-predict: empty command");
  // Writes to a dead child must fail with EPIPE rather than kill us.
  ::signal(SIGPIPE, SIG_IGN);

  int to_child[2];
  int from_child[2];
  int exec_status[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) {
    throw TransportError("ei-predict: pipe failed");
  }
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw TransportError("ei-predict: pipe failed");
  }
  if (::pipe2(exec_status, O_CLOEXEC) != 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) {
      ::close(fd);
    }
    throw TransportError("ei-predict: pipe failed");
  }

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1],
                   exec_status[0], exec_status[1]}) {
      ::close(fd);
    }
    throw TransportError("ei-predict: fork failed");
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execvp(args[0], args.data());
    const int err = errno;
    [[maybe_unused]] ssize_t ignored = ::write(exec_status[1], &err, sizeof(err));
    ::_exit(127);
  }

  ::close(to_child[0]);
  ::close(from_child[1]);
  ::close(exec_status[1]);
  int err = 0;
  ssize_t got;
  do {
    got = ::read(exec_status[0], &err, sizeof(err));
  } while (got < 0 && errno == EINTR);
  ::close(exec_status[0]);
  if (got == sizeof(err)) {
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::waitpid(pid, nullptr, 0);
    throw TransportError("ei-predict: cannot execute '" + argv[0] +
                         "': " + std::strerror(err));
  }
  pid_ = pid;
  io_ = std::make_unique<FdTransport>(from_child[0], to_child[1]);
}

void ChildProcessTransport::Close() { io_->Close(); }

ChildProcessTransport::~ChildProcessTransport() {
  io_->Close();
  io_.reset();
  if (pid_ <= 0) return;
  const auto deadline = Clock::now() + Millis(2000);
  while (Clock::now() < deadline) {
    const pid_t r = ::waitpid(pid_, nullptr, WNOHANG);
    if (r == pid_ || r < 0) return;
    std::this_thread::sleep_for(Millis(10));
  }
  ::kill(pid_, SIGKILL);
  ::waitpid(pid_, nullptr, 0);
}

std::unique_ptr<LineTransport> ConnectTcp(const std::string& host,
                                          std::uint16_t port, Millis timeout) {
  ::signal(SIGPIPE, SIG_IGN);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res);
      rc != 0) {
    throw TransportError("ei-predict: cannot resolve " + host + ": " +
                         ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res,
                                                              &::freeaddrinfo);
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC,
                            ai->ai_protocol);
    if (fd < 0) continue;
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd pfd{fd, POLLOUT, 0};
      rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
      int soerr = 0;
      socklen_t len = sizeof(soerr);
      if (rc == 1 && ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &soerr, &len) == 0 &&
          soerr == 0) {
        rc = 0;
      } else {
        last_error = rc == 0 ? "connect timed out" : std::strerror(soerr);
        rc = -1;
      }
    } else if (rc != 0) {
      last_error = std::strerror(errno);
    }
    if (rc == 0) {
      ::fcntl(fd, F_SETFL, flags);
      const int write_fd = ::dup(fd);
      return std::make_unique<FdTransport>(fd, write_fd);
    }
    ::close(fd);
  }
  throw TransportError("ei-predict: cannot connect to " + host + ":" +
                       service + ": " + last_error);
}

// ---------------------------------------------------------------------------
// Client

Capabilities Handshake(LineTransport& transport, TaskKind task,
                       Millis timeout) {
  transport.WriteLine(EncodeHello(task));
  const Capabilities caps = DecodeHelloReply(transport.ReadLine(timeout));
  if (caps.task != task) {
    throw ProtocolError(ProtocolError::Kind::kTaskMismatch,
                        "ei-predict: server serves " +
                            std::string(TaskName(caps.task)) + ", expected " +
                            std::string(TaskName(task)));
  }
  return caps;
}

RemotePredictor::RemotePredictor(std::unique_ptr<LineTransport> transport,
                                 Task task, RemoteOptions options)
    : transport_(std::move(transport)), task_(task), options_(options) {
  capabilities_ = Handshake(*transport_, task_.kind, options_.handshake_timeout);
}

RemotePredictor::~RemotePredictor() {
  try {
    Shutdown();
  } catch (const Error&) {
  }
}

void RemotePredictor::Shutdown() {
  std::lock_guard<std::mutex> lock(write_mu_);
  if (closed_) return;
  closed_ = true;
  try {
    transport_->WriteLine(EncodeBye());
  } catch (const TransportError&) {
  }
  transport_->Close();
}

std::string RemotePredictor::AwaitResponse(std::uint64_t id,
                                           Clock::time_point deadline) {
  std::unique_lock<std::mutex> lock(state_mu_);
  for (;;) {
    if (auto it = pending_.find(id); it != pending_.end()) {
      std::string line = std::move(it->second);
      pending_.erase(it);
      return line;
    }
    if (!failure_.empty()) throw TransportError(failure_);
    if (!reader_active_) {
      reader_active_ = true;
      lock.unlock();
      std::string line;
      std::string error;
      try {
        line = transport_->ReadLine(std::chrono::duration_cast<Millis>(
            deadline - Clock::now()));
      } catch (const TransportError& e) {
        error = e.what();
      }
      lock.lock();
      reader_active_ = false;
      if (!error.empty()) {
        failure_ = error;
        state_cv_.notify_all();
        throw TransportError(error);
      }
      const auto got = PeekResponseId(line);
      state_cv_.notify_all();
      // Lines without an id go to whoever is waiting for this request, so
      // DecodeResponse reports them.
      if (!got || *got == id) return line;
      pending_[*got] = std::move(line);
      continue;
    }
    if (state_cv_.wait_until(lock, deadline) == std::cv_status::timeout &&
        pending_.find(id) == pending_.end()) {
      throw TransportError("ei-predict: timed out waiting for reply");
    }
  }
}

PredictionBatch RemotePredictor::Predict(const TokenMatrix& rows) {
  if (rows.rows() == 0) return PredictionBatch(task_.width(), {});
  const auto deadline = Clock::now() + options_.request_timeout;

  if (!capabilities_.concurrent) {
    std::lock_guard<std::mutex> lock(write_mu_);
    if (closed_) throw TransportError("ei-predict: channel closed");
    if (!failure_.empty()) throw TransportError(failure_);
    const std::uint64_t id = next_id_++;
    try {
      transport_->WriteLine(EncodeRequest(id, rows, task_.kind));
      const std::string line = transport_->ReadLine(
          std::chrono::duration_cast<Millis>(deadline - Clock::now()));
      return DecodeResponse(line, id, rows.rows(), task_);
    } catch (const TransportError& e) {
      failure_ = e.what();
      throw;
    }
  }

  std::uint64_t id = 0;
  {
    std::lock_guard<std::mutex> lock(write_mu_);
    if (closed_) throw TransportError("ei-predict: channel closed");
    {
      std::lock_guard<std::mutex> state(state_mu_);
      if (!failure_.empty()) throw TransportError(failure_);
    }
    id = next_id_++;
    transport_->WriteLine(EncodeRequest(id, rows, task_.kind));
  }
  return DecodeResponse(AwaitResponse(id, deadline), id, rows.rows(), task_);
}

}  // namespace protocol
}  // namespace ei
