#include "biasvote/session_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "biasvote/error.hpp"

namespace biasvote::triage {

namespace fs = std::filesystem;

void atomic_write(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot open " + tmp.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < contents.size()) {
    const auto n = ::write(fd, contents.data() + done, contents.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw Error("write failed for " + tmp.string() + ": " + std::strerror(err));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0)
    throw Error("cannot flush " + tmp.string() + ": " + std::strerror(errno));
  if (::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error("cannot rename " + tmp.string() + ": " + std::strerror(errno));
  const auto parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const int dfd = ::open(parent.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

SessionStore::SessionStore(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

bool SessionStore::valid_id(const std::string& id) noexcept {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

fs::path SessionStore::path_for(const std::string& id) const {
  if (!valid_id(id)) throw SessionNotFound("invalid session id '" + id + "'");
  return dir_ / (id + ".json");
}

bool SessionStore::exists(const std::string& id) const {
  return valid_id(id) && fs::is_regular_file(dir_ / (id + ".json"));
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir_)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    auto id = e.path().stem().string();
    // triage sample drops its run manifest next to the sessions
    if (valid_id(id) && id != "run_manifest") ids.push_back(std::move(id));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::shared_ptr<SessionStore::Slot> SessionStore::slot(const std::string& id) const {
  std::lock_guard lock(slots_mu_);
  auto& s = slots_[id];
  if (!s) s = std::make_shared<Slot>();
  return s;
}

CodingSession SessionStore::get(const std::string& id) const {
  const auto p = path_for(id);
  auto s = slot(id);
  std::lock_guard lock(s->mu);
  if (!fs::is_regular_file(p)) throw SessionNotFound("no session '" + id + "'");
  return load_session(p);
}

void SessionStore::write_locked(const CodingSession& s) { atomic_write(path_for(s.id()), serialize(s)); }

void SessionStore::put(const CodingSession& s) {
  auto sl = slot(s.id());
  std::lock_guard lock(sl->mu);
  write_locked(s);
}

CodingSession SessionStore::update(const std::string& id, const std::function<void(CodingSession&)>& fn) {
  const auto p = path_for(id);
  auto sl = slot(id);
  std::lock_guard lock(sl->mu);
  if (!fs::is_regular_file(p)) throw SessionNotFound("no session '" + id + "'");
  auto s = load_session(p);
  fn(s);
  write_locked(s);
  return s;
}

}  // namespace biasvote::triage
