#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sid/tensor.hpp"
#include "sid/trainer.hpp"

namespace sid::tool {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text that reads back as the same double.
std::string format_real(double v);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<train::LogRow>& log);
void write_teacher_csv(const std::filesystem::path& path, const std::vector<train::TeacherLogRow>& log);
/// Header x0,x1,... then one row per sample.
void write_samples_csv(const std::filesystem::path& path, const Tensor& samples);

/// Numeric table keyed by header name. Throws CsvError on ragged rows or
/// unparsable cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

/// Writes `text` to `path` through a temporary sibling and a rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace sid::tool
