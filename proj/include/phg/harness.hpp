#pragma once

// Command drivers behind the phg tool. Each returns an exit code
// (0 pass, 2 fail, 1 usage or config error) and writes its reports under
// out_dir/<entry>/ (JSON, plus CSV decay tables).

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "phg/config.hpp"
#include "phg/heisenberg.hpp"

namespace phg {

inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFail = 2;

struct CommandResult {
  int exit_code = kExitPass;
  nlohmann::json report;
  std::vector<std::string> files;
  /// One line for the console.
  std::string summary;
};

/// Writes through a temporary file and a rename, so readers never see a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

/// Runs the checker that matches the entry's declared class.
CommandResult cmd_check(const RunConfig& c, const CorpusEntry& e, const std::string& out_dir);
/// HS^m entry: a_0..a_N as DSL files, the restriction residual and a per-term homogeneity check.
CommandResult cmd_extract(const RunConfig& c, const CorpusEntry& e, const std::string& out_dir);
/// S^m_phg entry: epsilon schedule, built extension and its hs_check.
CommandResult cmd_extend(const RunConfig& c, const CorpusEntry& e, const std::string& out_dir);
/// HS^m, S^m_phg or polynomial S^m entry through verify_theorem2.
CommandResult cmd_roundtrip(const RunConfig& c, const CorpusEntry& e, const std::string& out_dir);

/// check is one of algebra, chart, prop116, thm108, prop123.
CommandResult cmd_heisenberg(const RunConfig& c, const HeisenbergModel& M, const std::string& check,
                             const std::string& out_dir);

// -- residual drivers shared with the acceptance suite ---------------------

struct AlgebraResiduals {
  double associativity = 0.0;
  double automorphism = 0.0;
  double left_invariance = 0.0;
  /// max |[X_a, X_b] f - b_{ba} X_0 f| (a, b >= 1), [X_0, X_b] f = 0.
  double commutators = 0.0;
  int samples = 0;
};

AlgebraResiduals algebra_residuals(const HeisenbergModel& M, int samples, std::uint64_t seed);

struct ChartResiduals {
  /// Closed-form exponential chart against an RK4 flow of delta_t(-v).X.
  double flow = 0.0;
  double inverse = 0.0;
  /// |det phi_y - (-1)^{d+1}|.
  double phi_determinant = 0.0;
  double sigma_round_trip = 0.0;
  int samples = 0;
};

ChartResiduals chart_residuals(const HeisenbergModel& M, int samples, std::uint64_t seed);

/// Max prop116_residual over random (y, eta).
double prop116_max_residual(const HeisenbergModel& M, int samples, std::uint64_t seed);

/// f = exp(-|xi|^2) through theorem108_check on the configured kernel grid.
Theorem108Report thm108_gaussian(const RunConfig& c, const HeisenbergModel& M);
/// u = sigma-bar^* exp(-|xi|^2 / 6 - t^2) through prop123_check, worst over the configured s.
std::vector<Prop123Report> prop123_gaussian(const RunConfig& c, const HeisenbergModel& M);

/// Symbol signature weights (2, 1, ..., 1) of the model.
Weights heisenberg_weights(const HeisenbergModel& M);

}  // namespace phg
