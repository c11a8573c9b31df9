#include "edgeprov/translator/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "edgeprov/error.hpp"
#include "edgeprov/json.hpp"

namespace edgeprov::translator {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kTempMarker = ".tmp-";

bool plain(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
         c == '.';
}

[[noreturn]] void io_fail(const std::string& what) { throw Error(Errc::Io, what + ": " + std::strerror(errno)); }

void write_all(int fd, std::string_view data, const std::string& what) {
  while (!data.empty()) {
    const auto n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail(what);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void fsync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string escape_workflow_id(std::string_view id) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (std::size_t i = 0; i < id.size(); ++i) {
    const char c = id[i];
    if (plain(c) && !(c == '.' && i == 0)) {
      out += c;
    } else {
      const auto b = static_cast<unsigned char>(c);
      out += '%';
      out += kHex[b >> 4];
      out += kHex[b & 0xF];
    }
  }
  return out;
}

std::optional<std::string> unescape_workflow_id(std::string_view name) {
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name[i] != '%') {
      if (!plain(name[i])) return std::nullopt;
      out += name[i];
      continue;
    }
    if (i + 2 >= name.size()) return std::nullopt;
    const int hi = hex(name[i + 1]);
    const int lo = hex(name[i + 2]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out += static_cast<char>(hi * 16 + lo);
    i += 2;
  }
  if (escape_workflow_id(out) != name) return std::nullopt;
  return out;
}

void write_atomically(const fs::path& path, std::string_view content) {
  static std::atomic<std::uint64_t> counter{0};
  const auto tmp = path.string() + std::string(kTempMarker) + std::to_string(::getpid()) + "-" +
                   std::to_string(counter.fetch_add(1));
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_fail("open " + tmp);
  try {
    write_all(fd, content, "write " + tmp);
    if (::fsync(fd) != 0) io_fail("fsync " + tmp);
  } catch (...) {
    ::close(fd);
    ::unlink(tmp.c_str());
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    const int err = errno;
    ::unlink(tmp.c_str());
    errno = err;
    io_fail("rename " + tmp);
  }
  fsync_dir(path.parent_path());
}

FileStore::FileStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
  for (const auto& dir : fs::directory_iterator(root_)) {
    if (!dir.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(dir.path())) {
      if (f.path().filename().string().find(kTempMarker) != std::string::npos) {
        std::error_code ec;
        fs::remove(f.path(), ec);
      }
    }
  }
}

fs::path FileStore::dir_for(std::string_view workflow_id) const {
  if (workflow_id.empty()) throw Error(Errc::InvalidArgument, "empty workflow id");
  return root_ / escape_workflow_id(workflow_id);
}

void FileStore::append_events(std::string_view workflow_id, const std::vector<CaptureRecord>& records) {
  if (records.empty()) return;
  const auto dir = dir_for(workflow_id);
  fs::create_directories(dir);
  const auto path = dir / "events.jsonl";
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) io_fail("open " + path.string());
  try {
    for (const auto& r : records) {
      auto line = record_to_json(r).dump();
      line += '\n';
      write_all(fd, line, "append " + path.string());
    }
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
}

void FileStore::write_document(std::string_view workflow_id, const prov::ProvDocument& doc) {
  const auto dir = dir_for(workflow_id);
  fs::create_directories(dir);
  write_atomically(dir / "prov.json", prov::to_json(doc));
}

std::optional<prov::ProvDocument> FileStore::load_document(std::string_view workflow_id) const {
  const auto path = dir_for(workflow_id) / "prov.json";
  if (!fs::exists(path)) return std::nullopt;
  return prov::document_from_json(read_file(path));
}

std::vector<CaptureRecord> FileStore::load_events(std::string_view workflow_id) const {
  const auto path = dir_for(workflow_id) / "events.jsonl";
  std::vector<CaptureRecord> out;
  if (!fs::exists(path)) return out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(Json::parse(line)));
    } catch (const Json::exception&) {
      throw Error(Errc::Malformed, "bad event line in " + path.string());
    }
  }
  return out;
}

std::vector<std::string> FileStore::workflows() const {
  std::vector<std::string> out;
  if (!fs::exists(root_)) return out;
  for (const auto& dir : fs::directory_iterator(root_)) {
    if (!dir.is_directory() || !fs::exists(dir.path() / "prov.json")) continue;
    if (auto id = unescape_workflow_id(dir.path().filename().string())) out.push_back(*id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace edgeprov::translator
