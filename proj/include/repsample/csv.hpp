#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace repsample {

/// Splits an RFC-4180 document into records of fields. `line_of_record`
/// receives the 1-based physical line where each record starts. Throws
/// DataError on stray or unterminated quotes.
std::vector<std::vector<std::string>> parse_csv_records(std::string_view text,
                                                        std::vector<std::size_t>& line_of_record);

std::string read_text_file(const std::string& path);

}  // namespace repsample
