#pragma once

#include <chrono>
#include <cstdint>
#include <future>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

namespace malmas::eval {

class ExternalError : public std::runtime_error {
 public:
  enum class Kind { spawn, timeout, protocol, adapter };
  ExternalError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(ExternalError::Kind kind);

/// Long-lived adapter process speaking JSON lines: one request object per
/// line on its stdin, one response per line on its stdout, matched by "id".
/// Requests may be pipelined from several threads; responses are routed by
/// id. Any protocol violation or timeout poisons the channel and fails every
/// pending request.
class ExternalEvaluator {
 public:
  explicit ExternalEvaluator(std::string cmd, std::chrono::milliseconds timeout = std::chrono::seconds(300));
  ~ExternalEvaluator();

  ExternalEvaluator(const ExternalEvaluator&) = delete;
  ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

  /// Sends `request` with a fresh id and returns a future for its "value".
  std::shared_future<double> submit(nlohmann::json request);

  /// submit() and wait, enforcing the per-request timeout.
  double call(nlohmann::json request);

  const std::string& command() const { return cmd_; }
  std::size_t requests_sent() const;

 private:
  void reader_loop();
  void fail_all(ExternalError::Kind kind, const std::string& message);

  std::string cmd_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;

  mutable std::mutex mutex_;
  std::map<std::int64_t, std::promise<double>> pending_;
  std::int64_t next_id_ = 1;
  bool broken_ = false;
  ExternalError::Kind broken_kind_ = ExternalError::Kind::protocol;
  std::string broken_reason_;
  bool stopping_ = false;
  bool reaped_ = false;
  std::thread reader_;
};

}  // namespace malmas::eval
