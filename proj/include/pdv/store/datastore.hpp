#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdv/core/json.hpp"
#include "pdv/core/types.hpp"

namespace pdv::store {

struct Accuracy {
  Duration sample_period{0};
  std::optional<double> noise_epsilon;
  std::optional<int> generalization_level;
  bool operator==(const Accuracy&) const = default;
};

struct ResultSet {
  std::string stream_id;
  std::vector<Reading> readings;
  Accuracy accuracy;
  bool operator==(const ResultSet&) const = default;
};

void to_json(Json& j, const Accuracy& a);
void from_json(const Json& j, Accuracy& a);
void to_json(Json& j, const ResultSet& r);
void from_json(const Json& j, ResultSet& r);

/// The personal data store: one append-only JSON-lines log per stream plus a
/// manifest, laid out as `<root>/manifest.json` and `<root>/streams/<id>.jsonl`.
///
/// One writer per stream, any number of concurrent readers. Readers always see
/// a prefix of the log.
class DataStore {
 public:
  /// Opens the store at `root`, creating the directory layout when absent.
  explicit DataStore(std::filesystem::path root);
  ~DataStore();

  DataStore(const DataStore&) = delete;
  DataStore& operator=(const DataStore&) = delete;

  const std::filesystem::path& root() const { return root_; }

  void register_stream(const Stream& stream);
  bool has_stream(std::string_view id) const;
  Stream stream(std::string_view id) const;
  std::vector<Stream> streams() const;

  void append(std::string_view stream_id, const Reading& reading);
  /// Appends in order with one flush; validates the whole batch first.
  void append_all(std::string_view stream_id, std::span<const Reading> readings);

  /// Readings with t1 <= timestamp < t2 at native accuracy.
  ResultSet range(std::string_view stream_id, Timestamp t1, Timestamp t2) const;

  std::optional<Timestamp> last_timestamp(std::string_view stream_id) const;
  std::size_t size(std::string_view stream_id) const;

 private:
  struct Log;

  Log& log(std::string_view id) const;
  void write_manifest() const;

  std::filesystem::path root_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::unique_ptr<Log>, std::less<>> logs_;
};

/// Buckets readings into consecutive `target` windows aligned to the first
/// timestamp; each non-empty bucket becomes one reading at the bucket start
/// holding the mean (numeric) or the majority label (categorical, ties to the
/// earliest label). A trailing partial bucket is kept.
ResultSet downsample(const ResultSet& result, Duration target);

}  // namespace pdv::store
