#include "causal_shap/cli/external_predictor.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

#include "causal_shap/errors.hpp"

namespace cshap::cli {

namespace {

// Longest response line kept for diagnostics.
constexpr std::size_t kRawLimit = 512;

std::string clipped(const std::string& s) { return s.size() <= kRawLimit ? s : s.substr(0, kRawLimit) + "..."; }

}  // namespace

ExternalPredictor::ExternalPredictor(std::string command, std::size_t num_features, double timeout_s,
                                     std::size_t batch_size)
    : command_(std::move(command)), num_features_(num_features), timeout_s_(timeout_s), batch_size_(batch_size) {
  if (command_.empty()) throw ValidationError("external predictor command is empty");
  if (!(timeout_s_ > 0.0)) throw ValidationError("external predictor timeout must be positive");
  // A child that dies early must surface as an error on write, not a signal.
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2], out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw PredictorError("cannot create pipe", std::strerror(errno));
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw PredictorError("cannot create pipe", std::strerror(errno));
  }
  pid_ = fork();
  if (pid_ < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw PredictorError("cannot fork predictor process", std::strerror(errno));
  }
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ExternalPredictor::~ExternalPredictor() { shutdown(); }

void ExternalPredictor::shutdown() {
  if (to_child_ >= 0) close(to_child_);
  to_child_ = -1;
  if (pid_ > 0) {
    // Give the child a moment to exit on end of input, then force it.
    int status = 0;
    for (int k = 0; k < 50; ++k) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }
  if (from_child_ >= 0) close(from_child_);
  from_child_ = -1;
}

std::string ExternalPredictor::exit_status() const {
  if (pid_ <= 0) return "";
  int status = 0;
  for (int k = 0; k < 20; ++k) {
    if (waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      if (WIFEXITED(status)) return " (exit status " + std::to_string(WEXITSTATUS(status)) + ")";
      if (WIFSIGNALED(status)) return " (killed by signal " + std::to_string(WTERMSIG(status)) + ")";
      return "";
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return "";
}

void ExternalPredictor::fail(const std::string& what, const std::string& raw) const {
  broken_ = true;
  throw PredictorError(what, clipped(raw));
}

void ExternalPredictor::write_all(const std::string& text) const {
  std::size_t done = 0;
  while (done < text.size()) {
    const auto n = write(to_child_, text.data() + done, text.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("predictor process exited before reading the request" + exit_status(), std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

std::string ExternalPredictor::read_line() const {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(timeout_s_));
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
    if (left <= 0) {
      if (pid_ > 0) kill(pid_, SIGKILL);
      fail("predictor timed out after " + std::to_string(timeout_s_) + " s", buffer_);
    }
    pollfd p{from_child_, POLLIN, 0};
    const int r = poll(&p, 1, static_cast<int>(std::min<long long>(left, 1000)));
    if (r < 0) {
      if (errno == EINTR) continue;
      fail("poll on predictor output failed", std::strerror(errno));
    }
    if (r == 0) continue;
    char chunk[4096];
    const auto n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("reading predictor output failed", std::strerror(errno));
    }
    if (n == 0) fail("predictor process exited before responding" + exit_status(), buffer_);
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<double> ExternalPredictor::exchange(const RowMatrix& rows) const {
  nlohmann::json request;
  auto& x = request["x"] = nlohmann::json::array();
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    x.push_back(std::vector<double>(rows.row(r).data(), rows.row(r).data() + rows.cols()));
  }
  write_all(request.dump() + "\n");
  ++requests_;
  const auto line = read_line();
  nlohmann::json response;
  try {
    response = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    fail("malformed predictor response", line);
  }
  if (!response.is_object() || !response.contains("y") || !response.at("y").is_array()) {
    fail("malformed predictor response: expected an object with a 'y' array", line);
  }
  const auto& y = response.at("y");
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& v : y) {
    if (!v.is_number()) fail("malformed predictor response: non-numeric value", line);
    out.push_back(v.get<double>());
  }
  if (y.size() != static_cast<std::size_t>(rows.rows())) {
    fail("predictor response length mismatch: expected " + std::to_string(rows.rows()) + " values, got " +
             std::to_string(y.size()),
         line);
  }
  return out;
}

std::vector<double> ExternalPredictor::predict(const RowMatrix& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != num_features_) {
    throw ValidationError("external predictor expects " + std::to_string(num_features_) + " features");
  }
  std::lock_guard lock(mu_);
  if (broken_) throw PredictorError("predictor process failed earlier", "");
  const auto m = static_cast<std::size_t>(rows.rows());
  if (m == 0) return {};
  const std::size_t step = batch_size_ == 0 ? m : batch_size_;
  if (step >= m) return exchange(rows);
  std::vector<double> out;
  out.reserve(m);
  for (std::size_t start = 0; start < m; start += step) {
    const auto len = std::min(step, m - start);
    const RowMatrix chunk = rows.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len));
    const auto y = exchange(chunk);
    out.insert(out.end(), y.begin(), y.end());
  }
  return out;
}

std::size_t ExternalPredictor::requests_sent() const {
  std::lock_guard lock(mu_);
  return requests_;
}

}  // namespace cshap::cli
