#pragma once

#include <string>
#include <vector>

namespace deq {

// Numbers in CSV output carry 9 significant digits; -inf is serialized as
// the literal "-inf".
std::string format_number(double v);
double parse_number(const std::string& field);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace deq
