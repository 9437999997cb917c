#ifndef LMKIT_IO_HH
#define LMKIT_IO_HH

#include <cstddef>
#include <fstream>
#include <string>
#include <string_view>

#include "lmkit/types.hh"

namespace lmkit {

std::ifstream open_input(const std::string &path);
std::ofstream open_output(const std::string &path);
// Flushes and throws IoError if any write failed.
void finish_output(std::ofstream &out, const std::string &path);

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

// Strict parsers: the whole field must be consumed.  line_no is only used in
// the ParseError message.
Count parse_count(std::string_view field, std::size_t line_no);
double parse_double(std::string_view field, std::size_t line_no);
long parse_int(std::string_view field, std::size_t line_no);

// Shortest representation that parses back to the identical double.
std::string format_shortest(double value);
// printf("%.7g"), with -0 normalized to 0.
std::string format_g7(double value);

}  // namespace lmkit

#endif  // LMKIT_IO_HH
