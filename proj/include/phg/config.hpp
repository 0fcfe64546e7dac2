#pragma once

// Run configuration and the symbol corpus read by the command-line tool.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phg/checks.hpp"
#include "phg/extension.hpp"
#include "phg/fourier.hpp"
#include "phg/grading.hpp"
#include "phg/grid.hpp"
#include "phg/heisenberg.hpp"

namespace phg {

struct Tolerances {
  double slope_tolerance = 0.3;
  double drift_tolerance = 0.3;
  double limit_tolerance = 1e-6;
  double tail_tolerance = kTailTolerance;
  double homogeneity_tolerance = 1e-9;
  double noise_floor = 1e-11;
  double t_switch = 1e-3;
  int k_max = 4;
  int deriv_max = 2;

  CheckOptions check_options() const { return {slope_tolerance, drift_tolerance, noise_floor}; }
};

/// Grids and sample counts for the Heisenberg checks.
struct HeisenbergSettings {
  BoxGrid kernel_grid{3, 64, 8.0};
  BoxGrid zoom_grid{{128, 64, 64}, {16.0, 8.0, 8.0}};
  int base_points = 5;
  int zoom_base_points = 3;
  std::vector<double> t_values{0.0, 0.5, 1.0};
  std::vector<double> s_values{1.5, 2.0};
  int algebra_samples = 1000;
  int prop116_samples = 100;
};

struct RunConfig {
  Weights weights{std::vector<int>{1, 1}};
  NormVariant variant = NormVariant::Smooth;
  GridSpec grid;
  Tolerances tol;
  /// Path of the corpus file (relative paths resolve against the config file).
  std::string corpus;
  /// Entry names to run; empty selects all.
  std::vector<std::string> entries;
  std::string out = "reports";
  std::uint64_t seed = 20240917;
  HeisenbergModel model = HeisenbergModel::heisenberg(1);
  HeisenbergSettings heisenberg;

  /// Throws ConfigError when a tolerance is not positive or k_max < 1.
  void validate() const;
};

/// Defaults, with the corpus pointing at the bundled one.
RunConfig default_config();
/// Reads a JSON config; missing keys keep their defaults.
RunConfig load_config(const std::string& path);

void to_json(nlohmann::json& j, const RunConfig& c);

enum class SymbolClass { Schwartz, Symbol, Polyhomogeneous, HomogeneousModSchwartz, Homogeneous };

SymbolClass parse_class(const std::string& s);
std::string class_name(SymbolClass c);

struct CorpusEntry {
  std::string name;
  SymbolClass cls = SymbolClass::Symbol;
  double m = 0.0;
  Weights weights;
  Signature sig;
  /// DSL source (every class but Polyhomogeneous).
  std::string source;
  /// Polyhomogeneous: a_0, a_1, ... of orders m, m - 1, ...
  std::vector<std::string> terms;
  /// Schwartz: declared decay order.
  int k = 0;
  /// HomogeneousModSchwartz: number of terms to extract minus one.
  int N = 2;
  std::string note;

  SymbolExpr symbol() const;
  Expansion expansion() const;
};

struct Corpus {
  std::vector<CorpusEntry> entries;

  const CorpusEntry& find(const std::string& name) const;
  std::vector<const CorpusEntry*> of_class(SymbolClass c) const;
};

Corpus load_corpus(const std::string& path);
void from_json(const nlohmann::json& j, CorpusEntry& e);
void to_json(nlohmann::json& j, const CorpusEntry& e);

}  // namespace phg
