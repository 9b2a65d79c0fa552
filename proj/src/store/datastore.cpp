#include "pdv/store/datastore.hpp"

#include <algorithm>
#include <fstream>
#include <shared_mutex>
#include <sstream>

#include "pdv/core/error.hpp"

namespace pdv::store {

namespace fs = std::filesystem;

void to_json(Json& j, const Accuracy& a) {
  j = Json{{"sample_period", encode_duration(a.sample_period)},
           {"noise_epsilon", a.noise_epsilon ? Json(*a.noise_epsilon) : Json(nullptr)},
           {"generalization_level",
            a.generalization_level ? Json(*a.generalization_level) : Json(nullptr)}};
}

void from_json(const Json& j, Accuracy& a) {
  a.sample_period = decode_duration(j.at("sample_period"));
  a.noise_epsilon.reset();
  a.generalization_level.reset();
  if (j.contains("noise_epsilon") && !j.at("noise_epsilon").is_null()) {
    a.noise_epsilon = j.at("noise_epsilon").get<double>();
  }
  if (j.contains("generalization_level") && !j.at("generalization_level").is_null()) {
    a.generalization_level = j.at("generalization_level").get<int>();
  }
}

void to_json(Json& j, const ResultSet& r) {
  j = Json{{"stream_id", r.stream_id}, {"readings", r.readings}, {"accuracy", r.accuracy}};
}

void from_json(const Json& j, ResultSet& r) {
  r.stream_id = j.at("stream_id").get<std::string>();
  r.readings = j.at("readings").get<std::vector<Reading>>();
  r.accuracy = j.at("accuracy").get<Accuracy>();
}

struct DataStore::Log {
  Stream meta;
  fs::path file;
  mutable std::shared_mutex mutex;
  std::vector<Reading> readings;
};

namespace {

fs::path manifest_path(const fs::path& root) { return root / "manifest.json"; }

fs::path log_path(const fs::path& root, std::string_view id) {
  return root / "streams" / (std::string(id) + ".jsonl");
}

void check_kind(const Stream& stream, const Reading& r) {
  const bool numeric = std::holds_alternative<double>(r.value);
  if (numeric != (stream.value_kind == ValueKind::numeric)) {
    throw Error(Errc::invalid_argument,
                "value kind does not match stream " + stream.id + " (" +
                    std::string(to_string(stream.value_kind)) + ")");
  }
}

std::vector<Reading> load_log(const fs::path& file) {
  std::vector<Reading> out;
  std::ifstream in(file);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      // Torn final write from a crash; anything after it cannot be trusted either.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw Error(Errc::decode_error, "corrupt log line in " + file.string());
    }
    out.push_back(decode<Reading>(j));
  }
  return out;
}

}  // namespace

DataStore::DataStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "streams");
  const auto manifest = manifest_path(root_);
  if (!fs::exists(manifest)) {
    write_manifest();
    return;
  }
  std::ifstream in(manifest);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(Errc::decode_error, "manifest " + manifest.string() + ": " + e.what());
  }
  for (const auto& s : j.at("streams")) {
    auto log = std::make_unique<Log>();
    log->meta = decode<Stream>(s);
    log->file = log_path(root_, log->meta.id);
    log->readings = load_log(log->file);
    logs_.emplace(log->meta.id, std::move(log));
  }
}

DataStore::~DataStore() = default;

void DataStore::write_manifest() const {
  Json streams = Json::array();
  for (const auto& [id, log] : logs_) streams.push_back(log->meta);
  const auto target = manifest_path(root_);
  const auto tmp = fs::path(target.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << Json{{"streams", streams}}.dump(2) << '\n';
    if (!out) throw Error(Errc::io_error, "cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
}

void DataStore::register_stream(const Stream& stream) {
  if (!is_valid_stream_id(stream.id)) throw Error(Errc::invalid_stream_id, "'" + stream.id + "'");
  if (stream.native_period.count() <= 0) {
    throw Error(Errc::invalid_period, "native period of " + stream.id + " must be positive");
  }
  std::lock_guard lock(registry_mutex_);
  if (logs_.count(stream.id)) throw Error(Errc::duplicate_stream, stream.id);
  auto log = std::make_unique<Log>();
  log->meta = stream;
  log->file = log_path(root_, stream.id);
  std::ofstream(log->file, std::ios::trunc);
  logs_.emplace(stream.id, std::move(log));
  write_manifest();
}

bool DataStore::has_stream(std::string_view id) const {
  std::lock_guard lock(registry_mutex_);
  return logs_.find(id) != logs_.end();
}

DataStore::Log& DataStore::log(std::string_view id) const {
  std::lock_guard lock(registry_mutex_);
  auto it = logs_.find(id);
  if (it == logs_.end()) throw Error(Errc::unknown_stream, std::string(id));
  return *it->second;
}

Stream DataStore::stream(std::string_view id) const { return log(id).meta; }

std::vector<Stream> DataStore::streams() const {
  std::lock_guard lock(registry_mutex_);
  std::vector<Stream> out;
  for (const auto& [id, log] : logs_) out.push_back(log->meta);
  return out;
}

void DataStore::append(std::string_view stream_id, const Reading& reading) {
  append_all(stream_id, std::span<const Reading>(&reading, 1));
}

void DataStore::append_all(std::string_view stream_id, std::span<const Reading> batch) {
  Log& l = log(stream_id);
  std::unique_lock lock(l.mutex);
  std::optional<Timestamp> last;
  if (!l.readings.empty()) last = l.readings.back().timestamp;
  for (const auto& r : batch) {
    check_kind(l.meta, r);
    if (last && r.timestamp <= *last) {
      throw Error(Errc::out_of_order_timestamp,
                  std::string(stream_id) + " at " + format_rfc3339(r.timestamp) + " (last " +
                      format_rfc3339(*last) + ")");
    }
    last = r.timestamp;
  }
  std::ofstream out(l.file, std::ios::app);
  for (const auto& r : batch) out << Json(r).dump() << '\n';
  out.flush();
  if (!out) throw Error(Errc::io_error, "cannot append to " + l.file.string());
  l.readings.insert(l.readings.end(), batch.begin(), batch.end());
}

ResultSet DataStore::range(std::string_view stream_id, Timestamp t1, Timestamp t2) const {
  if (t2 < t1) throw Error(Errc::invalid_range, "range end precedes start");
  const Log& l = log(stream_id);
  std::shared_lock lock(l.mutex);
  auto by_time = [](const Reading& r, Timestamp t) { return r.timestamp < t; };
  auto first = std::lower_bound(l.readings.begin(), l.readings.end(), t1, by_time);
  auto last = std::lower_bound(first, l.readings.end(), t2, by_time);
  ResultSet out;
  out.stream_id = std::string(stream_id);
  out.readings.assign(first, last);
  out.accuracy.sample_period = l.meta.native_period;
  return out;
}

std::optional<Timestamp> DataStore::last_timestamp(std::string_view stream_id) const {
  const Log& l = log(stream_id);
  std::shared_lock lock(l.mutex);
  if (l.readings.empty()) return std::nullopt;
  return l.readings.back().timestamp;
}

std::size_t DataStore::size(std::string_view stream_id) const {
  const Log& l = log(stream_id);
  std::shared_lock lock(l.mutex);
  return l.readings.size();
}

namespace {

Value aggregate(std::span<const Reading> bucket) {
  if (std::holds_alternative<double>(bucket.front().value)) {
    double sum = 0.0;
    for (const auto& r : bucket) sum += std::get<double>(r.value);
    return sum / static_cast<double>(bucket.size());
  }
  // Majority label; iterating in time order and requiring a strictly larger
  // count keeps the earliest label on ties.
  std::vector<std::pair<std::string, int>> counts;
  for (const auto& r : bucket) {
    const auto& label = std::get<std::string>(r.value);
    auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return c.first == label; });
    if (it == counts.end()) counts.emplace_back(label, 1);
    else ++it->second;
  }
  const auto* best = &counts.front();
  for (const auto& c : counts) {
    if (c.second > best->second) best = &c;
  }
  return best->first;
}

}  // namespace

ResultSet downsample(const ResultSet& result, Duration target) {
  const Duration current = result.accuracy.sample_period;
  if (target.count() <= 0 || current.count() <= 0 || target < current || target.count() % current.count() != 0) {
    throw Error(Errc::invalid_period, format_duration(target) + " is not a multiple of " + format_duration(current));
  }
  if (target == current) return result;

  ResultSet out;
  out.stream_id = result.stream_id;
  out.accuracy = result.accuracy;
  out.accuracy.sample_period = target;
  if (result.readings.empty()) return out;

  const auto width = std::chrono::duration_cast<std::chrono::milliseconds>(target);
  const Timestamp origin = result.readings.front().timestamp;
  std::size_t begin = 0;
  while (begin < result.readings.size()) {
    const auto index = (result.readings[begin].timestamp - origin) / width;
    const Timestamp bucket_start = origin + index * width;
    const Timestamp bucket_end = bucket_start + width;
    std::size_t end = begin;
    while (end < result.readings.size() && result.readings[end].timestamp < bucket_end) ++end;
    std::span<const Reading> bucket(result.readings.data() + begin, end - begin);
    out.readings.push_back(Reading{bucket_start, aggregate(bucket)});
    begin = end;
  }
  return out;
}

}  // namespace pdv::store
