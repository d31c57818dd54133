#include "knotcord/cache.hpp"

#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include "knotcord/errors.hpp"

namespace knotcord {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMagic = "knotcord-cache 1";
constexpr const char* kSuffix = ".ent";

std::uint64_t fnv1a(const std::string& s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string iso_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

CacheStore::CacheStore(fs::path dir) : dir_(std::move(dir)) {
  if (dir_.empty()) throw MalformedSyntax("empty cache directory path");
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec)
    throw MalformedSyntax("cannot create cache directory " + dir_.string() +
                          ": " + ec.message());
}

std::string CacheStore::hash_name(const std::string& key) {
  // Two independent 64-bit FNV-1a passes; the full key is verified on read,
  // so the digest only has to spread names, not be collision-proof.
  std::uint64_t a = fnv1a(key, 14695981039346656037ULL);
  std::uint64_t b = fnv1a(key, 88172645463325252ULL);
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << a;
  os.width(16);
  os << b;
  return os.str();
}

fs::path CacheStore::path_for(const std::string& key) const {
  return dir_ / (hash_name(key) + kSuffix);
}

std::optional<CacheStore::Hit> CacheStore::get(const std::string& key,
                                               std::ostream* warn) {
  if (!enabled()) return std::nullopt;
  fs::path p = path_for(key);
  std::ifstream in(p);
  if (!in) return std::nullopt;

  auto corrupt = [&](const std::string& why) -> std::optional<Hit> {
    if (warn)
      *warn << "warning: ignoring cache entry " << p.string() << " (" << why
            << "); recomputing\n";
    return std::nullopt;
  };

  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    return corrupt("bad header");
  if (!std::getline(in, line) || line.rfind("engine: ", 0) != 0)
    return corrupt("missing engine line");
  if (!std::getline(in, line) || line.rfind("key: ", 0) != 0)
    return corrupt("missing key line");
  if (line.substr(5) != key) return corrupt("key mismatch");
  Hit hit;
  if (!std::getline(in, line) || line.rfind("wall_ms: ", 0) != 0)
    return corrupt("missing wall_ms line");
  try {
    hit.wall_ms = std::stod(line.substr(9));
  } catch (const std::exception&) {
    return corrupt("unreadable wall_ms");
  }
  if (!std::getline(in, line) || line.rfind("timestamp: ", 0) != 0)
    return corrupt("missing timestamp line");
  if (!std::getline(in, line) || line != "value:")
    return corrupt("missing value marker");
  std::ostringstream value;
  value << in.rdbuf();
  hit.value = value.str();
  if (!hit.value.empty() && hit.value.back() == '\n') hit.value.pop_back();
  return hit;
}

void CacheStore::put(const std::string& key, const std::string& value,
                     double wall_ms) {
  if (!enabled()) return;
  fs::path target = path_for(key);
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << kMagic << "\n"
        << "engine: " << kEngineVersion << "\n"
        << "key: " << key << "\n"
        << "wall_ms: " << wall_ms << "\n"
        << "timestamp: " << iso_timestamp() << "\n"
        << "value:\n"
        << value << "\n";
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      return;  // cache write failure is never fatal to the computation
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) fs::remove(tmp, ec);
}

CacheStore::Stats CacheStore::stats() const {
  Stats s;
  if (!enabled()) return s;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    if (!entry.is_regular_file() || entry.path().extension() != kSuffix)
      continue;
    ++s.entries;
    s.bytes += entry.file_size(ec);
  }
  return s;
}

std::uint64_t CacheStore::clear() {
  std::uint64_t removed = 0;
  if (!enabled()) return removed;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    if (!entry.is_regular_file() || entry.path().extension() != kSuffix)
      continue;
    std::error_code rec;
    if (fs::remove(entry.path(), rec)) ++removed;
  }
  return removed;
}

std::string cache_key(const std::string& op, const std::string& field_desc,
                      const std::string& canonical_diagram) {
  return std::string("v") + kEngineVersion + "|" + op + "|" + field_desc +
         "|" + canonical_diagram;
}

}  // namespace knotcord
