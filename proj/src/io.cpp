#include "poro/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace poro {

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

double read_f64(std::istream& in) {
  std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_vector(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(out, v[i]);
}

Vector read_vector(std::istream& in, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = read_f64(in);
  return v;
}

void expect_magic(std::istream& in, const char* magic, const std::filesystem::path& path) {
  char buf[8] = {};
  in.read(buf, static_cast<std::streamsize>(std::strlen(magic)));
  if (!in || std::strncmp(buf, magic, std::strlen(magic)) != 0)
    throw Error("bad magic in " + path.string() + " (expected " + magic + ")");
}

}  // namespace

void write_matrix_poro1(const std::filesystem::path& path, const Matrix& A, double tau) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out.write("PORO1", 5);
  write_u64(out, static_cast<std::uint64_t>(A.rows()));
  write_u64(out, static_cast<std::uint64_t>(A.cols()));
  write_f64(out, tau);
  for (Eigen::Index c = 0; c < A.cols(); ++c) write_vector(out, A.col(c));
  if (!out) throw Error("write failed: " + path.string());
}

Matrix read_matrix_poro1(const std::filesystem::path& path, double* tau) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  expect_magic(in, "PORO1", path);
  auto rows = static_cast<Eigen::Index>(read_u64(in));
  auto cols = static_cast<Eigen::Index>(read_u64(in));
  double t = read_f64(in);
  if (tau) *tau = t;
  Matrix A(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) A.col(c) = read_vector(in, rows);
  if (!in) throw Error("truncated PORO1 file: " + path.string());
  return A;
}

void write_series(const std::filesystem::path& path, const TimeSeries& ts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out.write("PORO1", 5);
  Eigen::Index n = ts.states.empty() ? 0 : ts.states.front().size();
  write_u64(out, static_cast<std::uint64_t>(n));
  write_u64(out, ts.states.size());
  write_f64(out, ts.tau);
  for (const auto& s : ts.states) write_vector(out, s);
  if (!out) throw Error("write failed: " + path.string());
}

TimeSeries read_series(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  expect_magic(in, "PORO1", path);
  auto n = static_cast<Eigen::Index>(read_u64(in));
  auto count = read_u64(in);
  TimeSeries ts;
  ts.tau = read_f64(in);
  ts.states.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) ts.states.push_back(read_vector(in, n));
  if (!in) throw Error("truncated PORO1 file: " + path.string());
  return ts;
}

void write_measurements(const std::filesystem::path& path, const MeasurementSeries& ms) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out.write("MEAS1", 5);
  Eigen::Index m = ms.values.empty() ? 0 : ms.values.front().size();
  write_u64(out, static_cast<std::uint64_t>(m));
  write_u64(out, ms.values.size());
  write_f64(out, ms.tau);
  write_f64(out, ms.noise_intensity);
  write_u64(out, ms.seed);
  for (const auto& v : ms.values) write_vector(out, v);
  if (!out) throw Error("write failed: " + path.string());
}

MeasurementSeries read_measurements(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  expect_magic(in, "MEAS1", path);
  auto m = static_cast<Eigen::Index>(read_u64(in));
  auto steps = read_u64(in);
  MeasurementSeries ms;
  ms.tau = read_f64(in);
  ms.noise_intensity = read_f64(in);
  ms.seed = read_u64(in);
  for (std::uint64_t k = 0; k < steps; ++k) ms.values.push_back(read_vector(in, m));
  if (!in) throw Error("truncated MEAS1 file: " + path.string());
  return ms;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size()) throw Error("csv: row width mismatch");
  rows_.push_back(cells);
}

std::string CsvWriter::to_string() const {
  std::ostringstream out;
  for (size_t c = 0; c < columns_.size(); ++c) out << (c ? "," : "") << columns_[c];
  out << "\n";
  for (const auto& row : rows_) {
    for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
  return out.str();
}

void CsvWriter::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);  // fixed newlines across platforms
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << to_string();
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace poro
