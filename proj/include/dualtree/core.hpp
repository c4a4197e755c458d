#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualtree {

// Row-major matrix of points. Immutable after construction and safe to read
// from many threads at once.
class Dataset {
 public:
  Dataset() = default;

  // Takes ownership of `values`, which must hold rows*cols finite reals.
  Dataset(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t size() const { return rows_; }
  std::size_t dim() const { return cols_; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

enum class DataRole : std::uint8_t { kQuery, kReference };

// Stable identity of one point in either input set.
struct PointRef {
  DataRole role = DataRole::kReference;
  std::uint32_t index = 0;

  friend bool operator==(const PointRef&, const PointRef&) = default;
};

// All node and point distances go through this so a different metric could be
// swapped in behind the same interface.
struct EuclideanMetric {
  double operator()(std::span<const double> a, std::span<const double> b) const;
};

// L2 distance. Throws std::invalid_argument on dimension mismatch.
double distance(std::span<const double> a, std::span<const double> b);

// Coordinate-wise mean. Throws std::invalid_argument on an empty set or
// mismatched dimensions.
std::vector<double> centroid(const std::vector<std::vector<double>>& points);

// CSV parse failure; line numbers are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Reads comma-separated decimal rows. A single leading row of non-numeric
// labels is skipped. Ragged rows, bad fields, and empty input throw
// ParseError with the offending line.
Dataset load_dataset(std::istream& in);
Dataset load_dataset_file(const std::string& path);

}  // namespace dualtree
