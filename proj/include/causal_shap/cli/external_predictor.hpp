#pragma once

#include <cstddef>
#include <mutex>
#include <string>
#include <sys/types.h>
#include <vector>

#include "causal_shap/predictor.hpp"

namespace cshap::cli {

// Black-box model behind a child process. Each request is one line
// {"x": [[...], ...]} on the child's stdin; the child answers with one line
// {"y": [...]} on stdout. Calls from several threads are serialized, so at
// most one request is in flight.
class ExternalPredictor final : public Predictor {
 public:
  // `command` runs under /bin/sh -c. `batch_size` 0 sends each call as one request.
  ExternalPredictor(std::string command, std::size_t num_features, double timeout_s = 60.0,
                    std::size_t batch_size = 0);
  ~ExternalPredictor() override;

  ExternalPredictor(const ExternalPredictor&) = delete;
  ExternalPredictor& operator=(const ExternalPredictor&) = delete;

  std::size_t num_features() const override { return num_features_; }
  std::vector<double> predict(const RowMatrix& rows) const override;

  std::size_t requests_sent() const;

 private:
  std::vector<double> exchange(const RowMatrix& rows) const;
  std::string read_line() const;
  void write_all(const std::string& text) const;
  [[noreturn]] void fail(const std::string& what, const std::string& raw) const;
  std::string exit_status() const;
  void shutdown();

  std::string command_;
  std::size_t num_features_;
  double timeout_s_;
  std::size_t batch_size_;
  mutable pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  mutable std::mutex mu_;
  mutable std::string buffer_;
  mutable bool broken_ = false;
  mutable std::size_t requests_ = 0;
};

}  // namespace cshap::cli
