#include "lmkit/io.hh"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>

#include "lmkit/error.hh"

namespace lmkit {

std::ifstream open_input(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "': " + std::strerror(errno));
  return in;
}

std::ofstream open_output(const std::string &path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot create '" + path + "': " + std::strerror(errno));
  return out;
}

void finish_output(std::ofstream &out, const std::string &path) {
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write to '" + path + "' failed");
}

namespace {

[[noreturn]] void bad_field(std::string_view field, std::size_t line_no, const char *what) {
  throw Error(ErrorCode::kParseError,
              "line " + std::to_string(line_no) + ": bad " + what + " '" + std::string(field) + "'");
}

}  // namespace

Count parse_count(std::string_view field, std::size_t line_no) {
  Count value = 0;
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || end != field.data() + field.size() || field.empty()) bad_field(field, line_no, "count");
  return value;
}

long parse_int(std::string_view field, std::size_t line_no) {
  long value = 0;
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || end != field.data() + field.size() || field.empty()) bad_field(field, line_no, "integer");
  return value;
}

double parse_double(std::string_view field, std::size_t line_no) {
  double value = 0;
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || end != field.data() + field.size() || field.empty()) bad_field(field, line_no, "number");
  return value;
}

std::string format_shortest(double value) {
  if (value == 0) value = 0;  // drop the sign of -0
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

std::string format_g7(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.7g", value);
  if (std::strcmp(buf, "-0") == 0) return "0";
  return buf;
}

}  // namespace lmkit
