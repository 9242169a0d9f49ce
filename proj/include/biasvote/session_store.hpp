#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "biasvote/triage.hpp"

namespace biasvote::triage {

/// Directory of `<id>.json` session files. Writes to one session are
/// serialized and reach disk (temp file, fsync, rename) before returning.
class SessionStore {
public:
  explicit SessionStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }

  /// Ids are limited to [A-Za-z0-9_-].
  static bool valid_id(const std::string& id) noexcept;

  bool exists(const std::string& id) const;
  std::vector<std::string> list() const;

  /// Throws SessionNotFound.
  CodingSession get(const std::string& id) const;

  /// Creates or replaces the session file.
  void put(const CodingSession& s);

  /// Applies `fn` under the session lock and persists the result. Nothing is
  /// written when `fn` throws.
  CodingSession update(const std::string& id, const std::function<void(CodingSession&)>& fn);

  std::filesystem::path path_for(const std::string& id) const;

private:
  struct Slot {
    std::mutex mu;
  };
  std::shared_ptr<Slot> slot(const std::string& id) const;
  void write_locked(const CodingSession& s);

  std::filesystem::path dir_;
  mutable std::mutex slots_mu_;
  mutable std::map<std::string, std::shared_ptr<Slot>> slots_;
};

/// Durable replace of `path` with `contents`.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

}  // namespace biasvote::triage
