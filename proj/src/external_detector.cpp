#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "adatrack/detector_sim.hpp"

namespace adatrack {

ExternalDetector::ExternalDetector(const std::string& command) {
  if (command.empty()) throw ConfigError("external detector command is empty");
  int in[2], out[2];
  if (pipe(in) != 0) throw std::runtime_error("pipe failed: " + std::string(std::strerror(errno)));
  if (pipe(out) != 0) {
    close(in[0]);
    close(in[1]);
    throw std::runtime_error("pipe failed: " + std::string(std::strerror(errno)));
  }
  pid_ = fork();
  if (pid_ < 0) {
    close(in[0]);
    close(in[1]);
    close(out[0]);
    close(out[1]);
    throw std::runtime_error("fork failed: " + std::string(std::strerror(errno)));
  }
  if (pid_ == 0) {
    dup2(in[0], STDIN_FILENO);
    dup2(out[1], STDOUT_FILENO);
    close(in[0]);
    close(in[1]);
    close(out[0]);
    close(out[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in[0]);
  close(out[1]);
  to_child_ = in[1];
  from_child_ = out[0];
  // A dead child must surface as an error, not kill us with SIGPIPE.
  signal(SIGPIPE, SIG_IGN);
}

ExternalDetector::~ExternalDetector() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

bool ExternalDetector::readLine(std::string& line) {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof(chunk));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<Detection> ExternalDetector::request(int frame_index) {
  const std::string req = std::to_string(frame_index) + "\n";
  std::size_t sent = 0;
  while (sent < req.size()) {
    const ssize_t n = write(to_child_, req.data() + sent, req.size() - sent);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw std::runtime_error("external detector closed its input");
    sent += static_cast<std::size_t>(n);
  }
  std::vector<Detection> dets;
  std::string line;
  while (true) {
    if (!readLine(line)) throw std::runtime_error("external detector exited mid-response");
    if (line.find_first_not_of(" \t") == std::string::npos) break;
    try {
      dets.push_back(parseDetectionLine(line));
    } catch (const InvalidInput& e) {
      throw DataError(std::string("external detector: ") + e.what());
    }
  }
  return dets;
}

}  // namespace adatrack
