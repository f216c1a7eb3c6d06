#include "csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sid::tool {

std::string format_real(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out.flush()) throw std::runtime_error("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<train::LogRow>& log) {
  std::string s = "images_seen,step,loss_psi,loss_theta,metric,alpha,sigma_mean\n";
  for (const auto& r : log) {
    s += std::to_string(r.images_seen) + "," + std::to_string(r.step) + "," + format_real(r.loss_psi) +
         "," + format_real(r.loss_theta) + "," + format_real(r.metric) + "," + format_real(r.alpha) +
         "," + format_real(r.sigma_mean) + "\n";
  }
  write_text_atomic(path, s);
}

void write_teacher_csv(const std::filesystem::path& path, const std::vector<train::TeacherLogRow>& log) {
  std::string s = "images_seen,step,loss\n";
  for (const auto& r : log) {
    s += std::to_string(r.images_seen) + "," + std::to_string(r.step) + "," + format_real(r.loss) + "\n";
  }
  write_text_atomic(path, s);
}

void write_samples_csv(const std::filesystem::path& path, const Tensor& samples) {
  std::string s;
  for (std::size_t j = 0; j < samples.cols(); ++j) s += (j ? ",x" : "x") + std::to_string(j);
  s += "\n";
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    for (std::size_t j = 0; j < samples.cols(); ++j) {
      if (j) s += ",";
      s += format_real(samples(i, j));
    }
    s += "\n";
  }
  write_text_atomic(path, s);
}

std::vector<double> CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] != name) continue;
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[j]);
    return out;
  }
  throw CsvError("column '" + name + "' not found");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw CsvError("'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw CsvError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                     " cells, header has " + std::to_string(t.header.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      double v = 0.0;
      const auto r = std::from_chars(c.data(), c.data() + c.size(), v);
      if (r.ec != std::errc() || r.ptr != c.data() + c.size()) {
        throw CsvError("line " + std::to_string(line_no) + ": cannot parse '" + c + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace sid::tool
