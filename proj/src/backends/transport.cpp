#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <httplib.h>

#include "inferalign/backends/wire.hpp"

namespace inferalign::backends {

SubprocessTransport::SubprocessTransport(std::string command) : command_(std::move(command)) {}

SubprocessTransport::~SubprocessTransport() { shutdown(); }

void SubprocessTransport::spawn() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw TransportError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw TransportError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    // Own process group, so shutdown also reaches anything the shell spawned.
    ::setpgid(0, 0);
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  pid_ = pid;
  to_child_ = fds[0];
  from_child_ = fds[0];
  buffer_.clear();
}

void SubprocessTransport::shutdown() {
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = from_child_ = -1;
  }
  if (pid_ > 0) {
    // Closing the socket delivers EOF; give the child a moment, then kill it.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
        ::kill(-pid_, SIGKILL);
        pid_ = -1;
        return;
      }
      ::usleep(2000);
    }
    ::kill(-pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
}

std::string SubprocessTransport::roundtrip(const std::string& /*op*/, const std::string& body,
                                           std::chrono::milliseconds timeout) {
  std::lock_guard lock(mutex_);
  if (pid_ < 0) spawn();

  const std::string line = body + "\n";
  std::size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n = ::send(to_child_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string reason = std::strerror(errno);
      shutdown();
      throw TransportError(describe() + ": write failed: " + reason);
    }
    sent += static_cast<std::size_t>(n);
  }

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return reply;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      shutdown();
      throw TimeoutError(describe() + ": no response within " + std::to_string(timeout.count()) + " ms");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    char chunk[4096];
    const ssize_t n = ::recv(from_child_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      shutdown();
      throw TransportError(describe() + ": backend closed the connection");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

HttpTransport::HttpTransport(std::string base_url) : base_url_(std::move(base_url)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  const auto scheme_end = base_url_.find("://");
  const auto path_start = base_url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  host_ = base_url_.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : base_url_.substr(path_start);
}

std::string HttpTransport::roundtrip(const std::string& op, const std::string& body,
                                     std::chrono::milliseconds timeout) {
  httplib::Client client(host_);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  const auto result = client.Post(path_prefix_ + "/" + op, body, "application/json");
  if (!result) {
    const auto err = result.error();
    const std::string reason = httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw TimeoutError(describe() + ": " + reason);
    }
    throw TransportError(describe() + ": " + reason);
  }
  if (result->status >= 500 && result->body.empty()) {
    throw TransportError(describe() + ": HTTP " + std::to_string(result->status));
  }
  return result->body;
}

}  // namespace inferalign::backends
