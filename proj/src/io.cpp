#include "deq/io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace deq {

std::string format_number(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  if (std::isnan(v)) throw std::runtime_error("refusing to serialize NaN");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

double parse_number(const std::string& field) {
  if (field == "-inf" || field == "-Inf") {
    return -std::numeric_limits<double>::infinity();
  }
  if (field == "inf" || field == "Inf") {
    return std::numeric_limits<double>::infinity();
  }
  std::size_t pos = 0;
  const double v = std::stod(field, &pos);
  if (pos != field.size()) {
    throw std::runtime_error("bad numeric field '" + field + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else if (ch != '\r') {
      current.push_back(ch);
    }
  }
  fields.push_back(current);
  return fields;
}

}  // namespace deq
