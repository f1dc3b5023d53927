#include "sleepx3/format.hpp"

#include <charconv>
#include <system_error>

#include "sleepx3/errors.hpp"

namespace sleepx3 {

void append_fixed9(std::string& out, double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::fixed, 9);
  out.append(buf, res.ptr);
}

std::string format_fixed9(double value) {
  std::string s;
  append_fixed9(s, value);
  return s;
}

double parse_double_strict(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end)
    throw Error("ParseError", "bad number '" + text + "'");
  return value;
}

long long parse_int_strict(const std::string& text) {
  long long value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end)
    throw Error("ParseError", "bad integer '" + text + "'");
  return value;
}

}  // namespace sleepx3
