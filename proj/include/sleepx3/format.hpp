#pragma once

#include <string>

namespace sleepx3 {

// Locale-independent numeric text: fixed 9 decimal places, '.' separator.
// Golden traces are compared byte-for-byte, so all file output goes
// through these.
std::string format_fixed9(double value);
void append_fixed9(std::string& out, double value);

double parse_double_strict(const std::string& text);  // throws "ParseError"
long long parse_int_strict(const std::string& text);

}  // namespace sleepx3
