#include "twolevel/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace twolevel {

bool Report::pass() const {
  for (const Criterion& c : criteria) {
    if (!c.pass) return false;
  }
  return true;
}

void Report::add(std::string name, bool ok, std::string detail) {
  criteria.push_back({std::move(name), ok, std::move(detail)});
}

nlohmann::json Report::to_json() const {
  nlohmann::json out;
  out["experiment"] = experiment;
  out["config"] = config;
  out["columns"] = columns;
  out["rows"] = rows;
  out["metrics"] = metrics;
  nlohmann::json verdicts = nlohmann::json::array();
  for (const Criterion& c : criteria) {
    verdicts.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  out["criteria"] = verdicts;
  out["pass"] = pass();
  return out;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.10g", value);
  return buffer;
}

void Report::write_csv(std::ostream& os) const {
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
    os << '\n';
  }
}

}  // namespace twolevel
