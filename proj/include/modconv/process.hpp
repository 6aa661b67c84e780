#pragma once

#include <sys/types.h>

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace modconv {

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal or timed out
  bool timed_out = false;
  std::string output;  // stdout and stderr, interleaved
};

/// Runs argv[0] (PATH lookup) to completion with stdin closed. Throws
/// IoError if the process cannot be spawned.
ProcessResult run_process(const std::vector<std::string>& argv,
                          std::chrono::milliseconds timeout = std::chrono::minutes(10));

/// A child with piped stdin/stdout; stderr is inherited. The destructor
/// closes stdin, then kills the child if it has not exited shortly after.
class ChildProcess {
 public:
  explicit ChildProcess(const std::vector<std::string>& argv);
  ~ChildProcess();

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  /// Writes `line` plus '\n'. Throws BackendError if the pipe is closed.
  void write_line(const std::string& line);

  enum class ReadStatus { line, eof, timeout };
  struct ReadResult {
    ReadStatus status;
    std::string line;
  };

  ReadResult read_line(std::chrono::steady_clock::time_point deadline);

  void close_stdin();

  /// Waits up to `grace`, then SIGKILLs. Returns the exit code, or -1 if signalled.
  int terminate(std::chrono::milliseconds grace = std::chrono::milliseconds(2000));

  pid_t pid() const { return pid_; }

 private:
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::string buffer_;
  bool eof_ = false;
  std::optional<int> exit_code_;
};

}  // namespace modconv
