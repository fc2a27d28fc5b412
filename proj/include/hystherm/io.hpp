#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hystherm/heat.hpp"
#include "hystherm/types.hpp"
#include "hystherm/verify.hpp"

namespace hystherm {

/// Seedable generator with identical output on every platform: mt19937_64
/// with the top 53 bits mapped to [0, 1).
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : gen_(seed) {}
  Scalar uniform01() { return static_cast<Scalar>(gen_() >> 11) * 0x1.0p-53; }
  Scalar uniform(Scalar a, Scalar b) { return a + (b - a) * uniform01(); }

 private:
  std::mt19937_64 gen_;
};

/// All validation failures of a config file, one message per offending field.
struct ConfigError : std::runtime_error {
  std::vector<std::string> issues;
  explicit ConfigError(std::vector<std::string> list);
};

struct NewtonOptions {
  Scalar tol = 1e-8;
  int max_iter = 10;
  std::string perturb_preset = "sin_3pix_cos_t";
  Scalar perturb_scale = 0.5;
};

struct ExperimentConfig {
  SpatialMesh mesh{1.0, 129};
  TimeGrid time{1.0, 257};
  BoundarySpec boundary{BoundaryKind::Dirichlet, BoundaryKind::Dirichlet};
  PlayConfig play{0.4, 0.0};
  bool play_enabled = true;
  SolverParams solver{};
  Scalar epsilon = 0.5;
  std::string u_preset = "two_sin_pix";  // empty when u_file is used
  std::string u_file;
  std::string y0_preset = "two_sin_pix";
  std::string h_preset = "sin_2pix_t";
  std::vector<Scalar> lambda_ladder{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  NewtonOptions newton{};
  std::uint64_t seed = 42;

  ForcingMode forcing() const {
    return play_enabled ? ForcingMode::play : ForcingMode::none;
  }
};

/// Parse and validate a JSON config; throws ConfigError listing every invalid
/// field. Missing keys take the documented defaults.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

const std::vector<std::string>& field_preset_names();
const std::vector<std::string>& initial_state_preset_names();

/// Build a named space-time preset; "random" draws from PortableRng(seed).
SpaceTimeField build_field_preset(const std::string& name, const SpatialMesh& mesh,
                                  const TimeGrid& grid, std::uint64_t seed);

/// Build a named initial state; Dirichlet boundary nodes are forced to zero.
Vector build_initial_state(const std::string& name, const SpatialMesh& mesh,
                           const BoundarySpec& bc, std::uint64_t seed);

/// Seed streams derived from the config seed (documented in the README).
constexpr std::uint64_t kSeedOffsetU = 0;
constexpr std::uint64_t kSeedOffsetH = 1;
constexpr std::uint64_t kSeedOffsetY0 = 2;
constexpr std::uint64_t kSeedOffsetPerturb = 3;
constexpr std::uint64_t kSeedOffsetMaxPrinciple = 1000;

/// Field CSV: header "x,t,value", one row per node, time-major (all x for
/// t_0, then t_1, ...), every number rendered with 17 significant digits so a
/// read-back is bit-exact.
void write_field_csv(const std::string& path, const SpaceTimeField& field);
SpaceTimeField read_field_csv(const std::string& path, const SpatialMesh& mesh,
                              const TimeGrid& grid);

void write_remainder_csv(const std::string& path, const RemainderReport& report);
void write_estimates_csv(const std::string& path,
                         const std::vector<EstimateReport>& reports);
void write_newton_csv(const std::string& path, const NewtonRunReport& report);

/// Longest strictly-decreasing suffix of a sequence (ratios diagnostics).
std::size_t decreasing_suffix_length(const std::vector<Scalar>& xs);

/// Resolve the control field of a config (preset or CSV file).
SpaceTimeField build_control(const ExperimentConfig& cfg);

/// Run one CLI subcommand into out_dir; returns the process exit status.
/// name is one of: simulate, first-order, verify, estimates, max-principle,
/// newton-solve. mode applies to first-order (default bouligand) and verify
/// (default: both modes).
int run_subcommand(const std::string& name, const ExperimentConfig& cfg,
                   const std::string& out_dir,
                   const std::optional<DerivativeMode>& mode = std::nullopt);

}  // namespace hystherm
