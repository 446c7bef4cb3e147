#include "uwsu/datagen/stats.hpp"

#include <cstdio>
#include <set>

namespace uwsu::datagen {

DatasetStats dataset_stats(const std::vector<QaRecord>& records) {
  DatasetStats s;
  s.total = records.size();
  std::map<std::string, std::size_t> task_counts, source_counts;
  std::map<std::string, std::set<std::string>> images;
  for (const auto& r : records) {
    const std::string task(to_string(r.task));
    ++task_counts[task];
    ++source_counts[r.source];
    images[task].insert(r.image_id);
  }
  const double denom = s.total == 0 ? 1.0 : static_cast<double>(s.total);
  for (QaTask t : kAllTasks) {
    const std::string name(to_string(t));
    const std::size_t n = task_counts[name];
    s.tasks.push_back({name, n, static_cast<double>(n) / denom});
    s.images_per_task[name] = images[name].size();
  }
  for (const auto& [name, n] : source_counts) s.sources.push_back({name, n, static_cast<double>(n) / denom});
  return s;
}

Json DatasetStats::to_json() const {
  Json j;
  j["total"] = total;
  auto rows = [](const std::vector<StatRow>& v) {
    Json o = Json::object();
    for (const auto& r : v) o[r.key] = {{"count", r.count}, {"proportion", r.proportion}};
    return o;
  };
  j["tasks"] = rows(tasks);
  j["sources"] = rows(sources);
  j["images_per_task"] = Json::object();
  for (const auto& t : tasks) j["images_per_task"][t.key] = images_per_task.at(t.key);
  return j;
}

std::string DatasetStats::to_csv() const {
  std::string out = "group,key,count,proportion,images\n";
  char buf[64];
  for (const auto& r : tasks) {
    std::snprintf(buf, sizeof buf, "%.6f", r.proportion);
    out += "task," + r.key + "," + std::to_string(r.count) + "," + buf + "," +
           std::to_string(images_per_task.at(r.key)) + "\n";
  }
  for (const auto& r : sources) {
    std::snprintf(buf, sizeof buf, "%.6f", r.proportion);
    out += "source," + r.key + "," + std::to_string(r.count) + "," + buf + ",\n";
  }
  return out;
}

std::string DatasetStats::to_table() const {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-18s %10s %10s %8s\n", "task", "records", "share", "images");
  out += buf;
  for (const auto& r : tasks) {
    std::snprintf(buf, sizeof buf, "%-18s %10zu %9.2f%% %8zu\n", r.key.c_str(), r.count, 100.0 * r.proportion,
                  images_per_task.at(r.key));
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-18s %10zu\n", "total", total);
  out += buf;
  if (!sources.empty()) {
    std::snprintf(buf, sizeof buf, "\n%-18s %10s %10s\n", "source", "records", "share");
    out += buf;
    for (const auto& r : sources) {
      std::snprintf(buf, sizeof buf, "%-18s %10zu %9.2f%%\n", (r.key.empty() ? "(none)" : r.key.c_str()), r.count,
                    100.0 * r.proportion);
      out += buf;
    }
  }
  return out;
}

}  // namespace uwsu::datagen
