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

#ifndef EI_PROTOCOL_HPP_
#define EI_PROTOCOL_HPP_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ei/predictor.hpp"

namespace ei {
namespace protocol {

// ei-predict/1: newline-delimited JSON, one compact object per line.
//
//   client -> {"protocol":"ei-predict/1","task":T}
//   server -> {"protocol":"ei-predict/1","task":T,"concurrent":B}
//   client -> {"id":N,"rows":[[...],...],"task":T}
//   server -> {"id":N,"outputs":[...]}   or   {"id":N,"error":"..."}
//   client -> {"bye":true}
inline constexpr std::string_view kVersion = "ei-predict/1";

using Clock = std::chrono::steady_clock;
using Millis = std::chrono::milliseconds;

inline constexpr Millis kHandshakeTimeout{10'000};
inline constexpr Millis kRequestTimeout{120'000};

struct Capabilities {
  std::string protocol;
  TaskKind task = TaskKind::kRegression;
  bool concurrent = false;
};

struct PredictRequest {
  std::uint64_t id = 0;
  std::vector<std::vector<TokenId>> rows;
  TaskKind task = TaskKind::kRegression;
};

// Wire encoding. Every Encode* result excludes the trailing newline.
std::string EncodeHello(TaskKind task);
std::string EncodeHelloReply(TaskKind task, bool concurrent);
std::string EncodeRequest(std::uint64_t id, const TokenMatrix& rows,
                          TaskKind task);
std::string EncodeResponse(std::uint64_t id, const PredictionBatch& outputs,
                           TaskKind task);
std::string EncodeErrorResponse(std::uint64_t id, std::string_view message);
std::string EncodeBye();

// Server-side parsing. Throws ProtocolError(kMalformed) on bad input.
TaskKind DecodeHello(std::string_view line);
// Returns nullopt for a bye message.
std::optional<PredictRequest> DecodeRequest(std::string_view line);

// Client-side parsing. Throws ProtocolError on version mismatch or bad shape.
Capabilities DecodeHelloReply(std::string_view line);

// Parses and validates a response line against the request it answers.
// An {"error": ...} reply becomes ModelError; everything else that breaks
// the format is a ProtocolError of the matching kind.
PredictionBatch DecodeResponse(std::string_view line, std::uint64_t expected_id,
                               std::size_t expected_rows, const Task& task);

// Id of a response line, or nullopt when the line has no integer id.
std::optional<std::uint64_t> PeekResponseId(std::string_view line);

// Bidirectional line channel.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  // Sends `line` followed by '\n'. Throws TransportError.
  virtual void WriteLine(std::string_view line) = 0;
  // Next line without its '\n'. Throws TransportError on EOF or timeout.
  virtual std::string ReadLine(Millis timeout) = 0;
  // Stops further writes; idempotent.
  virtual void Close() = 0;
};

// Transport over a pair of file descriptors, which it owns.
class FdTransport : public LineTransport {
 public:
  FdTransport(int read_fd, int write_fd);
  ~FdTransport() override;
  FdTransport(const FdTransport&) = delete;
  FdTransport& operator=(const FdTransport&) = delete;

  void WriteLine(std::string_view line) override;
  std::string ReadLine(Millis timeout) override;
  void Close() override;

 private:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

// Spawns argv[0] with argv, talking over its standard input and output.
// The child's stderr is inherited. The destructor closes the pipes and reaps
// the child, killing it if it does not exit within a short grace period.
class ChildProcessTransport final : public LineTransport {
 public:
  explicit ChildProcessTransport(const std::vector<std::string>& argv);
  ~ChildProcessTransport() override;

  void WriteLine(std::string_view line) override { io_->WriteLine(line); }
  std::string ReadLine(Millis timeout) override { return io_->ReadLine(timeout); }
  void Close() override;

 private:
  std::unique_ptr<FdTransport> io_;
  int pid_ = -1;
};

// Connects to host:port over TCP.
std::unique_ptr<LineTransport> ConnectTcp(const std::string& host,
                                          std::uint16_t port,
                                          Millis timeout = kHandshakeTimeout);

// Sends the hello and checks the reply. Throws TransportError on timeout and
// ProtocolError on a version or task mismatch.
Capabilities Handshake(LineTransport& transport, TaskKind task,
                       Millis timeout = kHandshakeTimeout);

struct RemoteOptions {
  Millis handshake_timeout = kHandshakeTimeout;
  Millis request_timeout = kRequestTimeout;
};

// Predictor backed by an external process speaking ei-predict/1. Requests go
// out one at a time unless the server advertised "concurrent": true, in which
// case several threads may have requests in flight and responses are matched
// by id.
class RemotePredictor final : public Predictor {
 public:
  RemotePredictor(std::unique_ptr<LineTransport> transport, Task task,
                  RemoteOptions options = {});
  ~RemotePredictor() override;

  Task task() const override { return task_; }
  bool concurrent() const override { return capabilities_.concurrent; }
  PredictionBatch Predict(const TokenMatrix& rows) override;

  const Capabilities& capabilities() const { return capabilities_; }
  // Sends {"bye":true} and closes the channel; idempotent.
  void Shutdown();

 private:
  std::string AwaitResponse(std::uint64_t id, Clock::time_point deadline);

  std::unique_ptr<LineTransport> transport_;
  Task task_;
  RemoteOptions options_;
  Capabilities capabilities_;

  std::mutex write_mu_;
  std::mutex state_mu_;
  std::condition_variable state_cv_;
  std::uint64_t next_id_ = 1;
  bool reader_active_ = false;
  bool closed_ = false;
  std::string failure_;
  std::map<std::uint64_t, std::string> pending_;
};

}  // namespace protocol
}  // namespace ei

#endif  // EI_PROTOCOL_HPP_
