#include "madp/event_log.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <memory>
#include <sstream>

namespace madp {

std::string iso_utc(std::int64_t epoch_seconds) {
  std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<std::int64_t> parse_iso_utc(const std::string& ts) {
  std::tm tm{};
  int y, mo, d, h, mi, s;
  if (std::sscanf(ts.c_str(), "%d-%d-%dT%d:%d:%dZ", &y, &mo, &d, &h, &mi, &s) != 6)
    return std::nullopt;
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = s;
  return static_cast<std::int64_t>(timegm(&tm));
}

Clock system_clock() {
  return [] {
    auto now = std::chrono::system_clock::now();
    return iso_utc(std::chrono::duration_cast<std::chrono::seconds>(
                       now.time_since_epoch())
                       .count());
  };
}

Clock stepping_clock(std::int64_t start_epoch_seconds) {
  auto next = std::make_shared<std::atomic<std::int64_t>>(start_epoch_seconds);
  return [next] { return iso_utc(next->fetch_add(1)); };
}

void to_json(json& j, const Event& e) {
  j = json{{"seq", e.seq},
           {"ts", e.ts},
           {"doc_id", e.doc_id},
           {"event_kind", e.event_kind},
           {"payload", e.payload}};
}

void from_json(const json& j, Event& e) {
  e.seq = j.at("seq").get<std::uint64_t>();
  e.ts = j.at("ts").get<std::string>();
  e.doc_id = j.at("doc_id").get<std::string>();
  e.event_kind = j.at("event_kind").get<std::string>();
  e.payload = j.value("payload", json::object());
}

EventLog::EventLog(std::filesystem::path path, Clock clock)
    : path_(std::move(path)), clock_(std::move(clock)) {
  if (path_.empty()) return;
  if (std::filesystem::exists(path_)) events_ = read_file(path_);
  if (path_.has_parent_path())
    std::filesystem::create_directories(path_.parent_path());
  {
    // drop a torn tail so the next append starts on a fresh line
    std::ostringstream keep;
    for (const auto& e : events_) keep << json(e).dump() << '\n';
    std::ifstream probe(path_, std::ios::binary);
    std::string current((std::istreambuf_iterator<char>(probe)), {});
    if (current != keep.str()) {
      std::ofstream rewrite(path_, std::ios::binary | std::ios::trunc);
      rewrite << keep.str();
    }
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw Error("cannot open event log " + path_.string());
}

Event EventLog::append(const std::string& doc_id, const std::string& kind,
                       json payload,
                       const std::function<void(const Event&)>& before_write) {
  std::lock_guard<std::mutex> lock(mu_);
  Event e;
  e.seq = events_.empty() ? 1 : events_.back().seq + 1;
  e.ts = clock_();
  e.doc_id = doc_id;
  e.event_kind = kind;
  e.payload = std::move(payload);
  if (before_write) before_write(e);
  if (out_.is_open()) {
    out_ << json(e).dump() << '\n';
    out_.flush();
    if (!out_) throw Error("write to event log " + path_.string() + " failed");
  }
  events_.push_back(e);
  return e;
}

std::vector<Event> EventLog::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return events_;
}

std::uint64_t EventLog::last_seq() const {
  std::lock_guard<std::mutex> lock(mu_);
  return events_.empty() ? 0 : events_.back().seq;
}

std::vector<Event> EventLog::read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open event log " + path.string(), 0);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  std::vector<Event> events;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    ++line_no;
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final write
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      Event e = json::parse(line).get<Event>();
      if (!events.empty() && e.seq != events.back().seq + 1)
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": sequence gap",
                         line_no);
      events.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " +
                           ex.what(),
                       line_no);
    }
  }
  return events;
}

}  // namespace madp
