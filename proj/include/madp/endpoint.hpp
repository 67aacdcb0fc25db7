#pragma once

// JSON-over-HTTP boundary used by every external model adapter (classifier,
// layout parser, extraction backends). Tests substitute scripted endpoints.

#include <chrono>
#include <functional>
#include <memory>
#include <string>

#include "madp/types.hpp"

namespace madp {

class ModelEndpoint {
 public:
  virtual ~ModelEndpoint() = default;
  /// Throws RetriableError for transport failures and 5xx answers,
  /// AdapterError for answers that are not JSON or are 4xx.
  virtual json post(const json& body) = 0;
  virtual std::string describe() const = 0;
};

class HttpEndpoint : public ModelEndpoint {
 public:
  /// `url` like "http://127.0.0.1:8080/classify".
  HttpEndpoint(std::string url, std::chrono::milliseconds timeout);
  json post(const json& body) override;
  std::string describe() const override { return url_; }

 private:
  std::string url_;
  std::string host_port_;
  std::string path_;
  std::chrono::milliseconds timeout_;
};

/// Wraps a callable; handy for scripted endpoints in tests and fixtures.
class FunctionEndpoint : public ModelEndpoint {
 public:
  using Fn = std::function<json(const json&)>;
  FunctionEndpoint(Fn fn, std::string name = "function")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  json post(const json& body) override { return fn_(body); }
  std::string describe() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  /// Replaceable so tests do not actually sleep.
  std::function<void(std::chrono::milliseconds)> sleep;

  static RetryPolicy standard();
  static RetryPolicy no_wait(int attempts = 3);
};

/// Thrown once every attempt failed with a retriable error.
class RetriesExhausted : public RetriableError {
 public:
  RetriesExhausted(const std::string& what, int attempts)
      : RetriableError(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

/// Retries RetriableError with exponential backoff (initial, 2x, 4x, ...).
/// AdapterError propagates immediately.
json post_with_retry(ModelEndpoint& endpoint, const json& body,
                     const RetryPolicy& policy);

}  // namespace madp
