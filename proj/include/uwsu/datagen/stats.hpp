#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "uwsu/datagen/records.hpp"

namespace uwsu::datagen {

struct StatRow {
  std::string key;
  std::size_t count = 0;
  double proportion = 0.0;  // count / total, 0 for an empty set
};

struct DatasetStats {
  std::size_t total = 0;
  std::vector<StatRow> tasks;    // every task tag, fixed order
  std::vector<StatRow> sources;  // sorted by name
  std::map<std::string, std::size_t> images_per_task;

  Json to_json() const;
  std::string to_csv() const;
  std::string to_table() const;
};

DatasetStats dataset_stats(const std::vector<QaRecord>& records);

}  // namespace uwsu::datagen
