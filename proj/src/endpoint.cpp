#include "madp/endpoint.hpp"

#include <thread>

#include "httplib.h"

namespace madp {

HttpEndpoint::HttpEndpoint(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {
  auto scheme = url_.find("://");
  if (scheme == std::string::npos)
    throw ValidationError("endpoint url needs a scheme: " + url_);
  auto slash = url_.find('/', scheme + 3);
  host_port_ = url_.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url_.substr(slash);
}

json HttpEndpoint::post(const json& body) {
  httplib::Client client(host_port_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res)
    throw RetriableError(url_ + ": " + httplib::to_string(res.error()));
  if (res->status >= 500)
    throw RetriableError(url_ + ": HTTP " + std::to_string(res->status));
  if (res->status >= 400)
    throw AdapterError(url_ + ": HTTP " + std::to_string(res->status));
  json out = json::parse(res->body, nullptr, false);
  if (out.is_discarded()) throw AdapterError(url_ + ": response is not JSON");
  return out;
}

RetryPolicy RetryPolicy::standard() {
  RetryPolicy p;
  p.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  return p;
}

RetryPolicy RetryPolicy::no_wait(int attempts) {
  RetryPolicy p;
  p.attempts = attempts;
  p.sleep = [](std::chrono::milliseconds) {};
  return p;
}

json post_with_retry(ModelEndpoint& endpoint, const json& body,
                     const RetryPolicy& policy) {
  std::string last;
  auto backoff = policy.initial_backoff;
  for (int attempt = 1; attempt <= policy.attempts; ++attempt) {
    try {
      return endpoint.post(body);
    } catch (const RetriableError& e) {
      last = e.what();
      if (attempt < policy.attempts) {
        if (policy.sleep) policy.sleep(backoff);
        backoff *= 2;
      }
    }
  }
  throw RetriesExhausted(endpoint.describe() + ": " +
                             std::to_string(policy.attempts) +
                             " attempts failed, last: " + last,
                         policy.attempts);
}

}  // namespace madp
