#pragma once

#include <string>
#include <vector>

namespace operon {

// Raw little-endian f64 arrays, row-major; sizes implied by metadata, no padding.
void write_f64(const std::string& path, const std::vector<double>& data);
std::vector<double> read_f64(const std::string& path, std::size_t expected_count);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

} // namespace operon
