#include "dualtree/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace dualtree {

Dataset::Dataset(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows_ == 0 || cols_ == 0) {
    throw std::invalid_argument("dataset must have at least one row and one column");
  }
  if (values_.size() != rows_ * cols_) {
    throw std::invalid_argument("dataset value count does not match rows*cols");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("dataset coordinates must be finite");
    }
  }
}

double EuclideanMetric::operator()(std::span<const double> a,
                                   std::span<const double> b) const {
  if (a.size() != b.size()) {
    throw std::invalid_argument("distance: dimension mismatch");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double gap = a[i] - b[i];
    sq += gap * gap;
  }
  return std::sqrt(sq);
}

double distance(std::span<const double> a, std::span<const double> b) {
  return EuclideanMetric{}(a, b);
}

std::vector<double> centroid(const std::vector<std::vector<double>>& points) {
  if (points.empty()) {
    throw std::invalid_argument("centroid: empty point set");
  }
  const std::size_t dim = points.front().size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& p : points) {
    if (p.size() != dim) {
      throw std::invalid_argument("centroid: dimension mismatch");
    }
    for (std::size_t d = 0; d < dim; ++d) mean[d] += p[d];
  }
  for (double& v : mean) v /= static_cast<double>(points.size());
  return mean;
}

ParseError::ParseError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message),
      line_(line) {}

namespace {

bool parse_field(std::string_view field, double& out) {
  std::size_t begin = 0;
  std::size_t end = field.size();
  while (begin < end && (field[begin] == ' ' || field[begin] == '\t')) ++begin;
  while (end > begin && (field[end - 1] == ' ' || field[end - 1] == '\t' ||
                         field[end - 1] == '\r')) {
    --end;
  }
  if (begin == end) return false;
  const char* first = field.data() + begin;
  const char* last = field.data() + end;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && std::isfinite(out);
}

std::vector<std::string_view> split_record(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

bool blank_line(std::string_view line) {
  for (char c : line) {
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

}  // namespace

Dataset load_dataset(std::istream& in) {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t line_no = 0;
  bool saw_record = false;
  bool skipped_header = false;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_line(line)) continue;
    const auto fields = split_record(line);
    std::vector<double> parsed(fields.size());
    bool ok = true;
    std::size_t bad_field = 0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_field(fields[i], parsed[i])) {
        ok = false;
        bad_field = i;
        break;
      }
    }
    if (!ok) {
      // One header record of labels is allowed before any data.
      if (!saw_record && !skipped_header) {
        skipped_header = true;
        continue;
      }
      throw ParseError(line_no, "invalid number in field " +
                                    std::to_string(bad_field + 1) + ": '" +
                                    std::string(fields[bad_field]) + "'");
    }
    if (!saw_record) {
      cols = parsed.size();
      saw_record = true;
    } else if (parsed.size() != cols) {
      throw ParseError(line_no, "expected " + std::to_string(cols) +
                                    " fields, got " +
                                    std::to_string(parsed.size()));
    }
    values.insert(values.end(), parsed.begin(), parsed.end());
    ++rows;
  }
  if (!saw_record) {
    throw ParseError(line_no == 0 ? 1 : line_no, "no data records");
  }
  return Dataset(rows, cols, std::move(values));
}

Dataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open dataset file: " + path);
  }
  return load_dataset(in);
}

}  // namespace dualtree
