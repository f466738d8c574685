#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace uwbtr {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);
/// Round-trip representation of an extended-precision timestamp.
std::string format_long_double(long double value);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void header(const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  /// Row whose leading columns are integers (ids, step indices).
  void row(const std::vector<long long>& ints, const std::vector<double>& values);
  std::ofstream& stream() { return out_; }

 private:
  std::ofstream out_;
  std::string path_;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace uwbtr
