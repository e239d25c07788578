// Adapter for external simulators speaking a line protocol over stdin/stdout:
//   HELLO D        -> READY
//   EVAL v1 .. vD  -> FAIL | PASS
//   QUIT
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstring>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "visyield/errors.hpp"
#include "visyield/testbench.hpp"

namespace vis {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class ExternalProcess {
 public:
  explicit ExternalProcess(const ExternalSpec& spec) : spec_(spec) {
    if (spec.command.empty()) throw ContractViolation("external_bench: empty command");
    if (spec.dim < 1) throw ContractViolation("external_bench: dimension must be >= 1");
    if (!(spec.timeout_seconds > 0.0)) throw ContractViolation("external_bench: timeout must be positive");
    launch();
    send("HELLO " + std::to_string(spec.dim));
    const std::string reply = receive();
    if (reply != "READY") {
      throw ProtocolError("external bench: expected READY on line " + std::to_string(lines_read_) + ", got \"" +
                              reply + "\"",
                          lines_read_);
    }
  }

  ExternalProcess(const ExternalProcess&) = delete;
  ExternalProcess& operator=(const ExternalProcess&) = delete;

  ~ExternalProcess() {
    if (fd_ >= 0) {
      const std::string quit = "QUIT\n";
      (void)::send(fd_, quit.data(), quit.size(), MSG_NOSIGNAL);
      ::close(fd_);
    }
    if (pid_ > 0) reap(std::chrono::milliseconds(500));
  }

  bool evaluate(const Vector& x) {
    std::lock_guard lock(mutex_);
    std::string line = "EVAL";
    for (Eigen::Index i = 0; i < x.size(); ++i) line += " " + format_double(x[i]);
    send(line);
    const std::string reply = receive();
    if (reply == "FAIL") return true;
    if (reply == "PASS") return false;
    throw ProtocolError("external bench: malformed reply \"" + reply + "\" on line " + std::to_string(lines_read_),
                        lines_read_);
  }

 private:
  void launch() {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
      throw SimulationError(std::string("external bench: socketpair failed: ") + std::strerror(errno));
    }
    std::vector<char*> argv;
    for (const auto& a : spec_.command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      throw SimulationError(std::string("external bench: fork failed: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::dup2(fds[1], STDIN_FILENO);
      ::dup2(fds[1], STDOUT_FILENO);
      ::execvp(argv[0], argv.data());
      ::_exit(127);
    }
    ::close(fds[1]);
    fd_ = fds[0];
  }

  void send(const std::string& line) {
    const std::string payload = line + "\n";
    std::size_t done = 0;
    while (done < payload.size()) {
      const auto n = ::send(fd_, payload.data() + done, payload.size() - done, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw SimulationError("external bench: process is gone (write failed: " + std::string(std::strerror(errno)) +
                              ")" + exit_description());
      }
      done += static_cast<std::size_t>(n);
    }
  }

  std::string receive() {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::duration<double>(spec_.timeout_seconds);
    for (;;) {
      const auto eol = buffer_.find('\n');
      if (eol != std::string::npos) {
        std::string line = buffer_.substr(0, eol);
        buffer_.erase(0, eol + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++lines_read_;
        return line;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
      if (remaining <= 0) {
        throw SimulationError("external bench: timed out after " + format_double(spec_.timeout_seconds) +
                              " s waiting for reply line " + std::to_string(lines_read_ + 1));
      }
      pollfd p{fd_, POLLIN, 0};
      const int ready = ::poll(&p, 1, static_cast<int>(remaining));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw SimulationError(std::string("external bench: poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) continue;
      char chunk[4096];
      const auto n = ::read(fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw SimulationError(std::string("external bench: read failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        throw SimulationError("external bench: process closed its output before reply line " +
                              std::to_string(lines_read_ + 1) + exit_description());
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::string exit_description() {
    if (pid_ <= 0) return "";
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      if (WIFEXITED(status)) return " (exit status " + std::to_string(WEXITSTATUS(status)) + ")";
      if (WIFSIGNALED(status)) return " (killed by signal " + std::to_string(WTERMSIG(status)) + ")";
    }
    return "";
  }

  void reap(std::chrono::milliseconds grace) {
    const auto deadline = std::chrono::steady_clock::now() + grace;
    while (std::chrono::steady_clock::now() < deadline) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
      ::usleep(5000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

  ExternalSpec spec_;
  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  std::size_t lines_read_ = 0;
  std::mutex mutex_;
};

}  // namespace

Testbench external_bench(const ExternalSpec& spec) {
  auto process = std::make_shared<ExternalProcess>(spec);
  std::ostringstream name;
  name << "external(" << spec.command.front() << ", D=" << spec.dim << ")";
  return Testbench(name.str(), spec.dim, [process](const Vector& x) { return process->evaluate(x); }, std::nullopt,
                   false);
}

}  // namespace vis
