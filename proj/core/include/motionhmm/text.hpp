#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace motionhmm {

// Canonical decimal text for a double: the shortest string that parses back
// to the same value (std::to_chars). Used for every number we write to CSV
// or JSON so that re-exporting an imported artifact is byte-identical.
std::string format_double(double value);

// Inverse of format_double; accepts any decimal/scientific literal plus
// "inf"/"-inf"/"nan". Throws validation_error on trailing garbage.
double parse_double(std::string_view text);

std::vector<std::string> split(std::string_view text, char delim);
std::string_view trim(std::string_view text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace motionhmm
