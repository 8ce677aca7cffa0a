#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace fracbayes {

// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double v);

// RFC-4180 writer: CRLF records, fields quoted only when needed. Numeric
// output goes through format_double so reruns are byte-identical.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void row(const std::vector<std::string>& fields);
  void row(const std::vector<double>& values);
  void close();

 private:
  std::ofstream out_;
};

// Reads a whole CSV into rows of fields; accepts CRLF or LF records.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace fracbayes
