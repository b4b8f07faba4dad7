#include "mrsid/io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace mrsid::io {

namespace {

static_assert(std::endian::native == std::endian::little, "matrix container I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& is, const std::string& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated matrix header in " + path);
  return v;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix_binary(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(kMatrixMagic, sizeof kMatrixMagic);
  put<std::uint32_t>(os, kMatrixVersion);
  put<std::uint32_t>(os, 0);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  os.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()));
  if (!os) throw IoError("write failed for " + path);
}

Eigen::MatrixXd read_matrix_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMatrixMagic, sizeof magic) != 0)
    throw IoError(path + " is not a matrix container (bad magic)");
  const auto version = take<std::uint32_t>(is, path);
  if (version != kMatrixVersion) throw IoError(path + ": unsupported container version " + std::to_string(version));
  (void)take<std::uint32_t>(is, path);
  const auto rows = take<std::uint64_t>(is, path);
  const auto cols = take<std::uint64_t>(is, path);
  if (rows > (1ULL << 40) || cols > (1ULL << 40) || (rows && cols > (1ULL << 40) / rows))
    throw IoError(path + ": implausible shape");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  if (!is.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size())))
    throw IoError(path + ": payload shorter than header shape");
  return rm;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
  if (!os) throw IoError("write failed for " + path);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::vector<double> data;
  Index cols = -1, rows = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Index n = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
      std::string cell = line.substr(pos, end - pos);
      const auto first = cell.find_first_not_of(" \t");
      const auto last = cell.find_last_not_of(" \t");
      cell = first == std::string::npos ? "" : cell.substr(first, last - first + 1);
      double v = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw IoError(path + ": bad number '" + cell + "' on row " + std::to_string(rows + 1));
      data.push_back(v);
      ++n;
      pos = end + 1;
    }
    if (cols < 0) cols = n;
    if (n != cols) throw IoError(path + ": ragged row " + std::to_string(rows + 1));
    ++rows;
  }
  if (rows == 0) throw IoError(path + " is empty");
  return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data.data(), rows, cols);
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  if (ends_with(path, ".csv"))
    write_matrix_csv(path, m);
  else
    write_matrix_binary(path, m);
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  return ends_with(path, ".csv") ? read_matrix_csv(path) : read_matrix_binary(path);
}

}  // namespace mrsid::io
