#pragma once

// Client for an out-of-process scorer speaking line-delimited JSON.
//
// The child is started once with `/bin/sh -c <command>` and kept alive across
// calls.  Each request line is {"id": "...", "smiles": "..."}; each response
// line is {"id": "...", "score": <number>} or {"id": "...", "error": "..."}.
// Responses may come back in any order.  A batch that is not fully answered
// before the deadline gets per-molecule timeout errors and the child is
// restarted on the next call.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "janus/error.hpp"

extern char** environ;

namespace janus {

struct EvaluatorSpec {
  std::string command;
  double timeout_seconds = 60.0;  // per batch
  std::size_t batch_size = 64;

  void validate() const {
    if (command.empty()) throw PreconditionError("evaluator command is empty");
    if (!(timeout_seconds > 0.0)) throw PreconditionError("evaluator timeout must be positive");
    if (batch_size < 1) throw PreconditionError("evaluator batch size must be >= 1");
  }
};

struct EvalRequest {
  std::string id;
  std::string smiles;
};

struct EvalResult {
  std::string id;
  std::optional<double> score;
  std::string error;  // set when score is empty

  bool ok() const { return score.has_value(); }
};

class ExternalEvaluator {
 public:
  explicit ExternalEvaluator(EvaluatorSpec spec) : spec_(std::move(spec)) { spec_.validate(); }
  ExternalEvaluator(const ExternalEvaluator&) = delete;
  ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;
  ~ExternalEvaluator() { stop(); }

  const EvaluatorSpec& spec() const { return spec_; }
  /// Lines that were not JSON objects with a string id.
  std::size_t malformed_lines() const { return malformed_; }
  std::size_t restarts() const { return spawns_ > 0 ? spawns_ - 1 : 0; }

  /// One result per request, in request order.  Concurrent calls are
  /// serialized.
  std::vector<EvalResult> evaluate(const std::vector<EvalRequest>& requests) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<EvalResult> out;
    out.reserve(requests.size());
    for (std::size_t start = 0; start < requests.size(); start += spec_.batch_size) {
      std::size_t end = std::min(requests.size(), start + spec_.batch_size);
      run_batch(requests, start, end, out);
    }
    return out;
  }

 private:
  void spawn() {
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw Error(std::string("pipe: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&fa, from_child[1], STDOUT_FILENO);
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) posix_spawn_file_actions_addclose(&fa, fd);
    std::string sh = "/bin/sh", dash_c = "-c", cmd = spec_.command;
    char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};
    int rc = ::posix_spawn(&pid_, "/bin/sh", &fa, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&fa);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      pid_ = -1;
      throw Error("cannot start evaluator '" + spec_.command + "': " + std::strerror(rc));
    }
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    ::fcntl(in_fd_, F_SETFL, ::fcntl(in_fd_, F_GETFL) | O_NONBLOCK);
    ::fcntl(out_fd_, F_SETFL, ::fcntl(out_fd_, F_GETFL) | O_NONBLOCK);
    ::fcntl(in_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(out_fd_, F_SETFD, FD_CLOEXEC);
    buffer_.clear();
    ++spawns_;
  }

  // Returns the exit status if the child has exited, killing it after a
  // short grace period otherwise.
  std::optional<int> stop() {
    if (in_fd_ >= 0) ::close(in_fd_);
    if (out_fd_ >= 0) ::close(out_fd_);
    in_fd_ = out_fd_ = -1;
    if (pid_ <= 0) return std::nullopt;
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return status;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
    return std::nullopt;
  }

  void run_batch(const std::vector<EvalRequest>& requests, std::size_t start, std::size_t end,
                 std::vector<EvalResult>& out) {
    if (pid_ <= 0) spawn();
    // Wire ids are private sequence numbers so stale or foreign ids can
    // never be confused with the caller's.
    std::map<std::string, std::size_t> pending;
    std::vector<EvalResult> results(end - start);
    std::string payload;
    for (std::size_t i = start; i < end; ++i) {
      std::string wire = std::to_string(next_id_++);
      pending.emplace(wire, i - start);
      results[i - start].id = requests[i].id;
      payload += nlohmann::json{{"id", wire}, {"smiles", requests[i].smiles}}.dump();
      payload += '\n';
    }
    std::size_t written = 0;
    auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(spec_.timeout_seconds);
    std::string failure;
    while (!pending.empty()) {
      auto now = std::chrono::steady_clock::now();
      if (now >= deadline) {
        failure = "timeout after " + format_seconds(spec_.timeout_seconds);
        stop();
        break;
      }
      pollfd fds[2];
      nfds_t nfds = 0;
      fds[nfds++] = {out_fd_, POLLIN, 0};
      if (written < payload.size()) fds[nfds++] = {in_fd_, POLLOUT, 0};
      int wait_ms = static_cast<int>(
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1);
      int rc = ::poll(fds, nfds, wait_ms);
      if (rc < 0 && errno != EINTR) throw Error(std::string("poll: ") + std::strerror(errno));
      if (rc <= 0) continue;
      if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        ssize_t n = ::write(in_fd_, payload.data() + written, payload.size() - written);
        if (n > 0) {
          written += static_cast<std::size_t>(n);
        } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
          failure = "evaluator closed its input";
          finish_dead_child(failure);
          break;
        }
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char chunk[4096];
        ssize_t n = ::read(out_fd_, chunk, sizeof chunk);
        if (n > 0) {
          buffer_.append(chunk, static_cast<std::size_t>(n));
          consume_lines(pending, results);
        } else if (n == 0) {
          failure = "evaluator exited";
          finish_dead_child(failure);
          break;
        } else if (errno != EAGAIN && errno != EINTR) {
          throw Error(std::string("read: ") + std::strerror(errno));
        }
      }
    }
    for (auto& [wire, idx] : pending) results[idx].error = failure;
    out.insert(out.end(), results.begin(), results.end());
  }

  void finish_dead_child(std::string& failure) {
    std::optional<int> status = stop();
    if (status && WIFEXITED(*status)) {
      int code = WEXITSTATUS(*status);
      if (code == 127 && spawns_ == 1) {
        throw Error("evaluator command not found: " + spec_.command);
      }
      failure += " (status " + std::to_string(code) + ")";
    }
  }

  void consume_lines(std::map<std::string, std::size_t>& pending, std::vector<EvalResult>& results) {
    std::size_t pos;
    while ((pos = buffer_.find('\n')) != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j["id"].is_string()) {
        ++malformed_;
        continue;
      }
      auto it = pending.find(j["id"].get<std::string>());
      if (it == pending.end()) continue;
      EvalResult& r = results[it->second];
      if (j.contains("score") && j["score"].is_number() && std::isfinite(j["score"].get<double>())) {
        r.score = j["score"].get<double>();
      } else if (j.contains("error") && j["error"].is_string()) {
        r.error = j["error"].get<std::string>();
        if (r.error.empty()) r.error = "evaluator error";
      } else {
        r.error = "malformed response: " + line;
      }
      pending.erase(it);
    }
  }

  static std::string format_seconds(double s) {
    std::string t = std::to_string(s);
    t.erase(t.find_last_not_of('0') + 1);
    if (!t.empty() && t.back() == '.') t.pop_back();
    return t + "s";
  }

  EvaluatorSpec spec_;
  std::mutex mutex_;
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
  std::size_t next_id_ = 0;
  std::size_t malformed_ = 0;
  std::size_t spawns_ = 0;
};

}  // namespace janus
