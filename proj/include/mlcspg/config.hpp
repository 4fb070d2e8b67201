#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlcspg/multilevel.hpp"

namespace mlcspg {

struct ProblemConfig {
  int spatial_dim = 1;
  double mean = 1.0;
  double forcing = 1.0;
  double qoi_weight = 1.0;
  std::string fluctuation = "none";  // none | cosine | patchwise
  double mu = 2.0;
  std::size_t terms = 0;
  std::vector<double> amplitudes;

  ParametricProblem build() const;
  friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;
};

struct RecoveryConfig {
  Algorithm algorithm = Algorithm::womp;
  std::optional<double> noise_level;
  double solver_tolerance = 1e-10;
  friend bool operator==(const RecoveryConfig&, const RecoveryConfig&) = default;
};

struct BenchConfig {
  std::size_t n_test = 1000;
  std::size_t refinement = 4;
  std::vector<double> h0_sweep;
  std::vector<std::size_t> mc_samples{1000};
  std::size_t compare_cells = 0;  // 0: finest mesh of the schedule
  friend bool operator==(const BenchConfig&, const BenchConfig&) = default;
};

struct ExperimentConfig {
  ProblemConfig problem;
  WeightConfig weights;
  ScheduleParams schedule;
  std::uint64_t seed = 1;
  SampleReuse sample_reuse = SampleReuse::fresh;
  RecoveryConfig recovery;
  std::optional<BenchConfig> bench;

  /// Cross-field checks run before any solve. Throws ConfigError.
  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Overrides applied on top of the parsed file, each `block.key=value` with a
/// TOML value (bare words are read as strings).
ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
void save_config(std::ostream& os, const ExperimentConfig& c);

}  // namespace mlcspg
