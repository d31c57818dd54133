#pragma once
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace knotcord {

inline constexpr const char* kEngineVersion = "0.1.0";

// Content-addressed on-disk result cache: one human-readable file per
// entry, written atomically (temp file + rename).  The full key -- engine
// version, operation, field descriptor and canonical diagram text -- is
// stored inside the entry and compared on read, so hash collisions and
// stale or corrupt files degrade to a recompute, never to a wrong answer.
// Entries are immutable: a put over an existing name simply rewrites the
// same content (or repairs a collision/corruption).
class CacheStore {
 public:
  CacheStore() = default;  // disabled: get misses, put is a no-op
  explicit CacheStore(std::filesystem::path dir);  // creates the directory

  bool enabled() const { return !dir_.empty(); }
  const std::filesystem::path& dir() const { return dir_; }

  struct Hit {
    std::string value;
    double wall_ms = 0;  // wall time of the original computation
  };

  // Returns the stored value for the key, or nullopt.  A malformed entry
  // or a key mismatch counts as a miss; when `warn` is non-null a one-line
  // diagnostic is written for each such file seen.
  std::optional<Hit> get(const std::string& key, std::ostream* warn = nullptr);

  void put(const std::string& key, const std::string& value, double wall_ms);

  struct Stats {
    std::uint64_t entries = 0;
    std::uint64_t bytes = 0;
  };
  Stats stats() const;
  std::uint64_t clear();  // removes entry files; returns how many

  // Filename stem for a key (hex digest); exposed for tests.
  static std::string hash_name(const std::string& key);

 private:
  std::filesystem::path dir_;
  std::filesystem::path path_for(const std::string& key) const;
};

// The cache key for an invariant computation: pins the engine version, the
// operation name, the field/deformation descriptor, and the canonical
// serialized diagram.
std::string cache_key(const std::string& op, const std::string& field_desc,
                      const std::string& canonical_diagram);

}  // namespace knotcord
