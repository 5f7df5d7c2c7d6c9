#pragma once

#include "poro/fem.hpp"
#include "poro/observation.hpp"
#include "poro/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace poro {

/// PORO1 binary layout: magic "PORO1", little-endian u64 N, u64 count,
/// f64 tau, then count f64 vectors of length N (step-major; displacement
/// block then pressure block). Also used for matrices (count = columns,
/// tau = 0).
void write_matrix_poro1(const std::filesystem::path& path, const Matrix& A, double tau = 0);
Matrix read_matrix_poro1(const std::filesystem::path& path, double* tau = nullptr);

void write_series(const std::filesystem::path& path, const TimeSeries& ts);
TimeSeries read_series(const std::filesystem::path& path);

/// MEAS1 layout: magic "MEAS1", u64 m, u64 steps, f64 tau, f64 Ξ, u64 seed,
/// step-major f64 vectors.
void write_measurements(const std::filesystem::path& path, const MeasurementSeries& ms);
MeasurementSeries read_measurements(const std::filesystem::path& path);

/// Shortest round-trip decimal representation (deterministic across runs).
std::string format_double(double v);

/// Deterministic CSV emitter: fixed header, %.17g-style doubles.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void add_row(const std::vector<std::string>& cells);
  void write(const std::filesystem::path& path) const;
  std::string to_string() const;

private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace poro
