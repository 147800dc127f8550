#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace rlk {

// 17 significant digits, round-trips through strtod
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::size_t width_;
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t column(const std::string& name) const;  // throws Error if absent
};
CsvTable read_csv(const std::string& path);

}  // namespace rlk
