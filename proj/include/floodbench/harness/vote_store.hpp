#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "floodbench/core/errors.hpp"
#include "floodbench/util/log.hpp"

namespace floodbench::harness {

namespace fs = std::filesystem;

enum class Choice { Left, Right };

struct VoteRecord {
  std::string pair_id;
  std::string left_model;
  std::string right_model;
  Choice choice = Choice::Left;
  std::string rater_id;
  std::string timestamp;  // UTC, ISO 8601
  std::string nonce;      // empty when the client sent none

  const std::string& chosen_model() const { return choice == Choice::Left ? left_model : right_model; }
  friend bool operator==(const VoteRecord&, const VoteRecord&) = default;
};

inline std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

inline nlohmann::json to_json(const VoteRecord& v) {
  nlohmann::json j{{"pair_id", v.pair_id},
                   {"left_model", v.left_model},
                   {"right_model", v.right_model},
                   {"choice", v.choice == Choice::Left ? "left" : "right"},
                   {"rater_id", v.rater_id},
                   {"timestamp", v.timestamp}};
  if (!v.nonce.empty()) j["nonce"] = v.nonce;
  return j;
}

inline VoteRecord vote_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("vote record must be a JSON object");
  auto str = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) throw SchemaError(std::string("vote record: missing string '") + key + "'");
    return j[key].get<std::string>();
  };
  VoteRecord v;
  v.pair_id = str("pair_id");
  v.left_model = str("left_model");
  v.right_model = str("right_model");
  const auto choice = str("choice");
  if (choice == "left") v.choice = Choice::Left;
  else if (choice == "right") v.choice = Choice::Right;
  else throw SchemaError("vote record: choice must be 'left' or 'right'");
  v.rater_id = str("rater_id");
  v.timestamp = str("timestamp");
  if (j.contains("nonce")) v.nonce = str("nonce");
  return v;
}

// Append-only JSON Lines vote log. Each append is written with O_APPEND and
// fsynced before returning. Opening replays the file; a damaged final line
// is moved to `<log>.quarantine` and cut from the log.
class VoteLog {
 public:
  explicit VoteLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    replay();
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open vote log " + path_.string() + ": " + std::strerror(errno));
  }
  ~VoteLog() {
    if (fd_ >= 0) ::close(fd_);
  }
  VoteLog(const VoteLog&) = delete;
  VoteLog& operator=(const VoteLog&) = delete;

  const std::filesystem::path& path() const { return path_; }
  const std::vector<VoteRecord>& records() const { return records_; }
  std::size_t quarantined_bytes() const { return quarantined_; }

  void append(const VoteRecord& v) {
    const std::string line = to_json(v).dump() + "\n";
    std::lock_guard lock(mu_);
    std::size_t written = 0;
    while (written < line.size()) {
      const auto n = ::write(fd_, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error("vote log write failed: " + std::string(std::strerror(errno)));
      }
      written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw Error("vote log fsync failed: " + std::string(std::strerror(errno)));
    records_.push_back(v);
  }

 private:
  void replay() {
    if (!std::filesystem::exists(path_)) return;
    std::ifstream in(path_, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0, good_end = 0, lineno = 0;
    while (pos < bytes.size()) {
      const auto nl = bytes.find('\n', pos);
      const bool terminated = nl != std::string::npos;
      const auto end = terminated ? nl : bytes.size();
      const std::string line = bytes.substr(pos, end - pos);
      ++lineno;
      const bool last = !terminated || end + 1 >= bytes.size();
      std::optional<VoteRecord> rec;
      if (terminated || !line.empty()) {
        try {
          rec = vote_from_json(nlohmann::json::parse(line));
        } catch (const std::exception& e) {
          if (!last) {
            throw SchemaError(path_.string() + " line " + std::to_string(lineno) + ": " + e.what());
          }
        }
      }
      if (!rec || !terminated) {
        // Either an unparseable final line or one whose newline never made it
        // to disk: both are treated as an interrupted append.
        quarantine(bytes.substr(pos), good_end);
        return;
      }
      records_.push_back(std::move(*rec));
      pos = end + 1;
      good_end = pos;
    }
  }

  void quarantine(const std::string& tail, std::size_t good_end) {
    auto qpath = path_;
    qpath += ".quarantine";
    std::ofstream q(qpath, std::ios::binary | std::ios::app);
    q << tail << '\n';
    q.close();
    std::filesystem::resize_file(path_, good_end);
    quarantined_ = tail.size();
    util::logger().warn("vote log {}: damaged final line ({} bytes) moved to {}", path_.string(), tail.size(),
                        qpath.string());
  }

  std::filesystem::path path_;
  int fd_ = -1;
  std::mutex mu_;
  std::vector<VoteRecord> records_;
  std::size_t quarantined_ = 0;
};

}  // namespace floodbench::harness
