#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace varexp::process {

struct RunOptions {
  std::filesystem::path cwd;
  std::vector<std::pair<std::string, std::string>> env;
  std::string stdin_data;
};

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;

  bool ok() const { return exit_code == 0; }
};

/// Runs argv[0] (PATH lookup) to completion, capturing stdout and stderr.
RunResult run(const std::vector<std::string>& argv, const RunOptions& options = {});

/// A child process whose stdout is consumed incrementally, line by line.
/// stderr is spooled to an anonymous temp file and available after finish().
class LineReader {
 public:
  LineReader(const std::vector<std::string>& argv, const RunOptions& options = {});
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  /// Next line without its '\n'; nullopt at end of stream.
  std::optional<std::string> next_line();

  /// Waits for the child; returns its exit code.
  int finish();
  const std::string& stderr_text() const { return err_; }

 private:
  bool fill();

  int pid_ = -1;
  int out_fd_ = -1;
  int err_fd_ = -1;
  std::string buffer_;
  std::size_t pos_ = 0;
  bool eof_ = false;
  bool finished_ = false;
  int exit_code_ = -1;
  std::string err_;
};

/// A long-lived request/response child (e.g. `git cat-file --batch`).
/// Not thread-safe; one owner at a time.
class BatchProcess {
 public:
  BatchProcess(const std::vector<std::string>& argv, const RunOptions& options = {});
  ~BatchProcess();
  BatchProcess(const BatchProcess&) = delete;
  BatchProcess& operator=(const BatchProcess&) = delete;

  void write(std::string_view data);
  std::string read_line();
  std::string read_exact(std::size_t n);

 private:
  bool fill();

  int pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
  std::size_t pos_ = 0;
};

}  // namespace varexp::process
