#ifndef MRSID_IO_HPP
#define MRSID_IO_HPP

#include "mrsid/em.hpp"
#include "mrsid/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrsid::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary matrix container, all fields little-endian:
//
//   offset  size  field
//   0       8     magic "MRSIDMAT"
//   8       4     uint32 format version (1)
//   12      4     uint32 reserved, 0
//   16      8     uint64 rows
//   24      8     uint64 cols
//   32      8*r*c float64 payload, row-major
inline constexpr char kMatrixMagic[8] = {'M', 'R', 'S', 'I', 'D', 'M', 'A', 'T'};
inline constexpr std::uint32_t kMatrixVersion = 1;

void write_matrix_binary(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_binary(const std::string& path);

// Comma-separated rows, no header, 17 significant digits.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

// Dispatch on extension: ".csv" is text, anything else the binary container.
void write_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::string& path);

struct Provenance {
  std::string tool = "mrsid";
  std::string tool_version;
  std::string command;
  std::optional<std::uint64_t> seed;
};

struct Baseline {
  Eigen::MatrixXd a;
  Eigen::MatrixXd c;
  Eigen::VectorXd x_last;
};

// Everything `predict` and `distance` need from a fit.
struct ModelArchive {
  int format_version = 1;
  Index p = 0, d = 0, T = 0;
  Hyperparams hyperparams;
  LdsParamsd params;
  std::vector<double> objective_trace;
  std::vector<double> expected_objective_trace;
  double initial_objective = 0;
  int iterations_run = 0;
  bool converged = false;
  Eigen::VectorXd x_last;  // smoothed x_T
  Eigen::MatrixXd v_last;  // smoothed Var(x_T)
  std::optional<Baseline> baseline;
  Provenance provenance;
};

ModelArchive make_archive(const FitReport<double>& report, const Hyperparams& hp, Index T, Provenance prov);
// A parameter-only archive (e.g. simulation ground truth).
ModelArchive make_archive(const LdsParamsd& params, Index T, Provenance prov);

// JSON text; doubles are written in shortest round-trip form so load(save(x))
// reproduces every value bit for bit.
void save_archive(const std::string& path, const ModelArchive& archive);
ModelArchive load_archive(const std::string& path);
std::string archive_to_string(const ModelArchive& archive);
ModelArchive archive_from_string(const std::string& text);

// `key = value` lines; '#' starts a comment; blank lines ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  // Whitespace- or comma-separated list of numbers.
  std::vector<double> get_list(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string format_double(double v);

}  // namespace mrsid::io

#endif  // MRSID_IO_HPP
