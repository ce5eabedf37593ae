#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>

namespace ratesync {

// All numeric CSV fields use 9 significant digits; output is deterministic
// for identical inputs.
inline std::string fmt_num(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return std::string(buffer);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(std::string_view text) { out_ << text << "\n"; }

  CsvWriter& field(std::string_view text) {
    if (!first_) out_ << ",";
    out_ << text;
    first_ = false;
    return *this;
  }
  CsvWriter& field(double value) { return field(fmt_num(value)); }
  CsvWriter& field(long value) { return field(std::to_string(value)); }
  CsvWriter& field(int value) { return field(std::to_string(value)); }

  void end_row() {
    out_ << "\n";
    first_ = true;
  }

  void comment(std::string_view text) { out_ << "# " << text << "\n"; }

 private:
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace ratesync
