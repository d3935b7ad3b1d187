#include "varexp/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

#include "varexp/error.hpp"

extern char** environ;

namespace varexp::process {

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

struct Pipe {
  int read = -1;
  int write = -1;
};

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::IoFailure, std::string("pipe: ") + std::strerror(errno));
  }
  return {fds[0], fds[1]};
}

void close_fd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

// Everything the child needs is materialized before fork so that the child
// only performs async-signal-safe calls.
struct ExecPlan {
  std::vector<std::string> argv_storage;
  std::vector<std::string> env_storage;
  std::vector<char*> argv;
  std::vector<char*> envp;
  std::string cwd;

  ExecPlan(const std::vector<std::string>& args, const RunOptions& options)
      : argv_storage(args), cwd(options.cwd.string()) {
    for (char** e = environ; e && *e; ++e) {
      std::string_view entry(*e);
      bool overridden = false;
      for (const auto& [key, value] : options.env) {
        if (entry.size() > key.size() && entry.substr(0, key.size()) == key &&
            entry[key.size()] == '=') {
          overridden = true;
          break;
        }
      }
      if (!overridden) env_storage.emplace_back(entry);
    }
    for (const auto& [key, value] : options.env) env_storage.push_back(key + "=" + value);
    for (auto& s : argv_storage) argv.push_back(s.data());
    argv.push_back(nullptr);
    for (auto& s : env_storage) envp.push_back(s.data());
    envp.push_back(nullptr);
  }
};

int spawn(const ExecPlan& plan, int stdin_fd, int stdout_fd, int stderr_fd) {
  ignore_sigpipe();
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::IoFailure, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    if (stdin_fd >= 0) ::dup2(stdin_fd, 0);
    if (stdout_fd >= 0) ::dup2(stdout_fd, 1);
    if (stderr_fd >= 0) ::dup2(stderr_fd, 2);
    if (!plan.cwd.empty() && ::chdir(plan.cwd.c_str()) != 0) ::_exit(127);
    ::execvpe(plan.argv[0], plan.argv.data(), plan.envp.data());
    ::_exit(127);
  }
  return pid;
}

int wait_child(int pid) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return -1;
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

int open_null() { return ::open("/dev/null", O_RDONLY | O_CLOEXEC); }

}  // namespace

RunResult run(const std::vector<std::string>& argv, const RunOptions& options) {
  const ExecPlan plan(argv, options);
  Pipe in = make_pipe(), out = make_pipe(), err = make_pipe();
  const int pid = spawn(plan, in.read, out.write, err.write);
  close_fd(in.read);
  close_fd(out.write);
  close_fd(err.write);

  RunResult result;
  std::size_t written = 0;
  if (options.stdin_data.empty()) close_fd(in.write);
  std::array<char, 65536> buf{};
  while (out.read >= 0 || err.read >= 0) {
    std::vector<pollfd> fds;
    if (out.read >= 0) fds.push_back({out.read, POLLIN, 0});
    if (err.read >= 0) fds.push_back({err.read, POLLIN, 0});
    if (in.write >= 0) fds.push_back({in.write, POLLOUT, 0});
    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (const auto& p : fds) {
      if (p.revents == 0) continue;
      if (p.fd == in.write) {
        const auto n = ::write(in.write, options.stdin_data.data() + written,
                               options.stdin_data.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if (n < 0 || written == options.stdin_data.size()) close_fd(in.write);
        continue;
      }
      const auto n = ::read(p.fd, buf.data(), buf.size());
      if (n <= 0) {
        if (p.fd == out.read) close_fd(out.read);
        else close_fd(err.read);
        continue;
      }
      (p.fd == out.read ? result.out : result.err).append(buf.data(), static_cast<std::size_t>(n));
    }
  }
  close_fd(in.write);
  result.exit_code = wait_child(pid);
  return result;
}

LineReader::LineReader(const std::vector<std::string>& argv, const RunOptions& options) {
  const ExecPlan plan(argv, options);
  Pipe out = make_pipe();
  std::FILE* spool = std::tmpfile();
  if (!spool) throw Error(ErrorCode::IoFailure, "tmpfile failed");
  err_fd_ = ::dup(::fileno(spool));
  std::fclose(spool);
  const int null_in = open_null();
  pid_ = spawn(plan, null_in, out.write, err_fd_);
  ::close(null_in);
  close_fd(out.write);
  out_fd_ = out.read;
}

LineReader::~LineReader() {
  if (!finished_) {
    close_fd(out_fd_);
    if (pid_ > 0) {
      ::kill(pid_, SIGTERM);
      wait_child(pid_);
    }
  }
  close_fd(err_fd_);
}

bool LineReader::fill() {
  if (eof_) return false;
  if (pos_ > 0) {
    buffer_.erase(0, pos_);
    pos_ = 0;
  }
  std::array<char, 1 << 16> buf{};
  for (;;) {
    const auto n = ::read(out_fd_, buf.data(), buf.size());
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      eof_ = true;
      return false;
    }
    buffer_.append(buf.data(), static_cast<std::size_t>(n));
    return true;
  }
}

std::optional<std::string> LineReader::next_line() {
  for (;;) {
    const auto nl = buffer_.find('\n', pos_);
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(pos_, nl - pos_);
      pos_ = nl + 1;
      return line;
    }
    if (!fill()) {
      if (pos_ < buffer_.size()) {
        std::string line = buffer_.substr(pos_);
        pos_ = buffer_.size();
        return line;
      }
      return std::nullopt;
    }
  }
}

int LineReader::finish() {
  if (finished_) return exit_code_;
  while (fill()) {
    pos_ = buffer_.size();
  }
  close_fd(out_fd_);
  exit_code_ = wait_child(pid_);
  finished_ = true;
  ::lseek(err_fd_, 0, SEEK_SET);
  std::array<char, 4096> buf{};
  for (;;) {
    const auto n = ::read(err_fd_, buf.data(), buf.size());
    if (n <= 0) break;
    err_.append(buf.data(), static_cast<std::size_t>(n));
  }
  return exit_code_;
}

BatchProcess::BatchProcess(const std::vector<std::string>& argv, const RunOptions& options) {
  const ExecPlan plan(argv, options);
  Pipe in = make_pipe(), out = make_pipe();
  const int null_err = ::open("/dev/null", O_WRONLY | O_CLOEXEC);
  pid_ = spawn(plan, in.read, out.write, null_err);
  ::close(null_err);
  close_fd(in.read);
  close_fd(out.write);
  in_fd_ = in.write;
  out_fd_ = out.read;
}

BatchProcess::~BatchProcess() {
  close_fd(in_fd_);
  close_fd(out_fd_);
  if (pid_ > 0) wait_child(pid_);
}

void BatchProcess::write(std::string_view data) {
  while (!data.empty()) {
    const auto n = ::write(in_fd_, data.data(), data.size());
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(ErrorCode::GitFailure, "batch process closed its input");
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

bool BatchProcess::fill() {
  if (pos_ > 0) {
    buffer_.erase(0, pos_);
    pos_ = 0;
  }
  std::array<char, 1 << 16> buf{};
  for (;;) {
    const auto n = ::read(out_fd_, buf.data(), buf.size());
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer_.append(buf.data(), static_cast<std::size_t>(n));
    return true;
  }
}

std::string BatchProcess::read_line() {
  for (;;) {
    const auto nl = buffer_.find('\n', pos_);
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(pos_, nl - pos_);
      pos_ = nl + 1;
      return line;
    }
    if (!fill()) throw Error(ErrorCode::GitFailure, "batch process ended unexpectedly");
  }
}

std::string BatchProcess::read_exact(std::size_t n) {
  while (buffer_.size() - pos_ < n) {
    if (!fill()) throw Error(ErrorCode::GitFailure, "batch process ended unexpectedly");
  }
  std::string out = buffer_.substr(pos_, n);
  pos_ += n;
  return out;
}

}  // namespace varexp::process
