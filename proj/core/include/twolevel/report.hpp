#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace twolevel {

struct Criterion {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Result of one experiment. `rows` is the per-N (or per-r) metric table that
// is also written as CSV; `metrics` holds the raw per-replication values every
// verdict can be recomputed from.
struct Report {
  std::string experiment;
  nlohmann::json config;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<Criterion> criteria;

  bool pass() const;
  void add(std::string name, bool pass, std::string detail);
  nlohmann::json to_json() const;
  void write_csv(std::ostream& os) const;
};

// Fixed-format decimal used in reports and CSV tables.
std::string format_number(double value);

}  // namespace twolevel
