#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "madp/types.hpp"

namespace madp {

/// Source of event timestamps (ISO-8601 UTC strings).
using Clock = std::function<std::string()>;

Clock system_clock();
/// Deterministic clock for tests: 2026-01-01T00:00:00Z plus one second per call.
Clock stepping_clock(std::int64_t start_epoch_seconds = 1767225600);
std::string iso_utc(std::int64_t epoch_seconds);
/// Seconds since the epoch for "YYYY-MM-DDTHH:MM:SSZ"; nullopt otherwise.
std::optional<std::int64_t> parse_iso_utc(const std::string& ts);

struct Event {
  std::uint64_t seq = 0;
  std::string ts;
  std::string doc_id;
  std::string event_kind;
  json payload;

  bool operator==(const Event&) const = default;
};

void to_json(json& j, const Event& e);
void from_json(const json& j, Event& e);

/// Append-only JSONL log with a single serialized writer. With an empty path
/// the log lives in memory only.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path = {}, Clock clock = system_clock());

  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  /// Assigns the next sequence number and timestamp, persists, returns it.
  /// `before_write` sees the final event first; if it throws, nothing is
  /// written.
  Event append(const std::string& doc_id, const std::string& kind, json payload,
               const std::function<void(const Event&)>& before_write = {});

  /// Consistent snapshot of every event appended so far.
  std::vector<Event> snapshot() const;
  std::uint64_t last_seq() const;
  const std::filesystem::path& path() const { return path_; }

  /// Reads a JSONL log. An unterminated final line (torn write) is dropped;
  /// any other malformed line throws ParseError with its line number.
  static std::vector<Event> read_file(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  Clock clock_;
  mutable std::mutex mu_;
  std::vector<Event> events_;
  std::ofstream out_;
};

}  // namespace madp
