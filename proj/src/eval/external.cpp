#include "malmas/eval/external.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <fmt/format.h>

extern char** environ;

namespace malmas::eval {

std::string_view to_string(ExternalError::Kind kind) {
  switch (kind) {
    case ExternalError::Kind::spawn: return "spawn";
    case ExternalError::Kind::timeout: return "timeout";
    case ExternalError::Kind::protocol: return "protocol";
    case ExternalError::Kind::adapter: return "adapter";
  }
  return "protocol";
}

ExternalEvaluator::ExternalEvaluator(std::string cmd, std::chrono::milliseconds timeout)
    : cmd_(std::move(cmd)), timeout_(timeout) {
  // A dead adapter must surface as EPIPE on write, not kill us.
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw ExternalError(ExternalError::Kind::spawn, std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ExternalError(ExternalError::Kind::spawn, std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setpgroup(&attr, 0);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);

  const char* argv[] = {"/bin/sh", "-c", cmd_.c_str(), nullptr};
  pid_t pid = -1;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, &attr, const_cast<char* const*>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw ExternalError(ExternalError::Kind::spawn, fmt::format("cannot spawn \"{}\": {}", cmd_, std::strerror(rc)));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  reader_ = std::thread([this] { reader_loop(); });
}

ExternalEvaluator::~ExternalEvaluator() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
    if (to_child_ >= 0) ::close(to_child_);
    to_child_ = -1;
  }
  if (reader_.joinable()) reader_.join();
  if (!reaped_) {
    // Give a well-behaved adapter a moment to exit on EOF, then kill the group.
    bool exited = false;
    for (int i = 0; i < 20 && !exited; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) exited = true;
      else ::usleep(10000);
    }
    if (!exited) {
      ::kill(-pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }
  ::close(from_child_);
}

std::size_t ExternalEvaluator::requests_sent() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(next_id_ - 1);
}

void ExternalEvaluator::fail_all(ExternalError::Kind kind, const std::string& message) {
  std::lock_guard lock(mutex_);
  if (!broken_) {
    broken_ = true;
    broken_kind_ = kind;
    broken_reason_ = message;
  }
  for (auto& [id, promise] : pending_) promise.set_exception(std::make_exception_ptr(ExternalError(kind, message)));
  pending_.clear();
}

void ExternalEvaluator::reader_loop() {
  std::string buffer;
  char chunk[4096];
  for (;;) {
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 50);
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) {
      std::lock_guard lock(mutex_);
      if (stopping_ && pending_.empty()) return;
      continue;
    }
    const ssize_t got = ::read(from_child_, chunk, sizeof chunk);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(got));
    for (std::size_t nl; (nl = buffer.find('\n')) != std::string::npos;) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (line.empty() || line == "\r") continue;
      nlohmann::json msg = nlohmann::json::parse(line, nullptr, false);
      if (msg.is_discarded() || !msg.is_object()) {
        fail_all(ExternalError::Kind::protocol, fmt::format("adapter sent a non-JSON line: {}", line.substr(0, 200)));
        continue;
      }
      const auto id_it = msg.find("id");
      std::lock_guard lock(mutex_);
      auto it = (id_it != msg.end() && id_it->is_number_integer()) ? pending_.find(id_it->get<std::int64_t>())
                                                                   : pending_.end();
      if (it == pending_.end()) {
        const std::string id_text = id_it == msg.end() ? "missing" : id_it->dump();
        const std::string reason = fmt::format("adapter replied with unknown id {}", id_text);
        if (!broken_) {
          broken_ = true;
          broken_kind_ = ExternalError::Kind::protocol;
          broken_reason_ = reason;
        }
        for (auto& [id, promise] : pending_)
          promise.set_exception(std::make_exception_ptr(ExternalError(ExternalError::Kind::protocol, reason)));
        pending_.clear();
        continue;
      }
      if (auto err = msg.find("error"); err != msg.end()) {
        const std::string text = err->is_string() ? err->get<std::string>() : err->dump();
        it->second.set_exception(std::make_exception_ptr(ExternalError(ExternalError::Kind::adapter, text)));
      } else if (auto value = msg.find("value"); value != msg.end() && value->is_number()) {
        it->second.set_value(value->get<double>());
      } else {
        it->second.set_exception(std::make_exception_ptr(
            ExternalError(ExternalError::Kind::protocol, "response has neither a numeric value nor an error")));
      }
      pending_.erase(it);
    }
  }
  // EOF: the adapter is gone.
  int status = 0;
  std::string why = "adapter closed its output";
  {
    std::lock_guard lock(mutex_);
    if (stopping_) {
      for (auto& [id, promise] : pending_)
        promise.set_exception(std::make_exception_ptr(ExternalError(ExternalError::Kind::protocol, why)));
      pending_.clear();
      return;
    }
  }
  bool got_status = false;
  for (int i = 0; i < 100 && !got_status; ++i) {
    if (::waitpid(pid_, &status, WNOHANG) == pid_) got_status = true;
    else ::usleep(10000);
  }
  if (!got_status) {
    ::kill(-pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }
  {
    std::lock_guard lock(mutex_);
    reaped_ = true;
  }
  if (got_status) {
    if (WIFEXITED(status)) {
      const int code = WEXITSTATUS(status);
      if (code == 127 || code == 126) {
        fail_all(ExternalError::Kind::spawn, fmt::format("cannot run \"{}\" (exit {})", cmd_, code));
        return;
      }
      why = fmt::format("adapter exited with status {}", code);
    } else if (WIFSIGNALED(status)) {
      why = fmt::format("adapter killed by signal {}", WTERMSIG(status));
    }
  }
  fail_all(ExternalError::Kind::protocol, why);
}

std::shared_future<double> ExternalEvaluator::submit(nlohmann::json request) {
  std::unique_lock lock(mutex_);
  if (broken_) throw ExternalError(broken_kind_, broken_reason_);
  const std::int64_t id = next_id_++;
  request["id"] = id;
  const std::string line = request.dump() + "\n";
  auto& promise = pending_[id];
  std::shared_future<double> future = promise.get_future().share();
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(to_child_, line.data() + written, line.size() - written);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      pending_.erase(id);
      lock.unlock();
      // Let the reader observe the exit status if it can.
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
      lock.lock();
      if (broken_) throw ExternalError(broken_kind_, broken_reason_);
      throw ExternalError(ExternalError::Kind::protocol, "adapter closed its input");
    }
    written += static_cast<std::size_t>(n);
  }
  return future;
}

double ExternalEvaluator::call(nlohmann::json request) {
  auto future = submit(std::move(request));
  if (future.wait_for(timeout_) != std::future_status::ready) {
    const std::string message = fmt::format("adapter did not answer within {} ms", timeout_.count());
    {
      std::lock_guard lock(mutex_);
      if (!reaped_) ::kill(-pid_, SIGKILL);
    }
    fail_all(ExternalError::Kind::timeout, message);
    throw ExternalError(ExternalError::Kind::timeout, message);
  }
  return future.get();
}

}  // namespace malmas::eval
