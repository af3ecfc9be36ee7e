#pragma once

// End-to-end batch run: beam transport per tilt and divergence, the
// tilt -> Werner-p calibration, entanglement sweeps, spin evolution and
// tomography statistics, written as CSV figure data plus a run manifest.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "channelion/channeling.hpp"
#include "channelion/io.hpp"
#include "channelion/spin_dynamics.hpp"

namespace channelion::pipeline {

/// (tilt as a fraction of psi_c, Werner p) anchors, strictly increasing in
/// tilt.
using Calibration = std::vector<std::pair<double, double>>;

Calibration default_calibration();

/// Piecewise-linear interpolation of the calibration at `tilt`, held
/// constant beyond the end anchors, times the channeled fraction and
/// clamped to [0, 1].
double map_tilt_to_p(double tilt, const Calibration& calibration, double channeled_fraction);

void validate_calibration(const Calibration& calibration);

struct TomographySettings {
  double n_scale = 1e3;
  std::size_t iterations = 1000;
  double tilt_psi_c = 0.1;
  bool posterior_weighting = false;
};

struct PipelineConfig {
  channeling::ChannelGeometry geometry;
  /// Beam energy, particle count, entry and thermal mode; tilt and
  /// divergence are swept.
  channeling::BeamConfig beam;
  spin::HyperfineMHz hyperfine;
  Calibration calibration = default_calibration();
  std::vector<double> tilts_psi_c{0.05, 0.1, 0.15, 0.2};
  std::vector<double> divergences_mrad{0.0, 1.0, 2.0, 3.0, 4.0};
  std::vector<double> b0_tesla{0.1, 0.2, 0.35, 0.5, 1.0, 2.0};
  /// The fig7 reduced state is averaged over `evolution_samples` equally
  /// spaced times in (0, evolution_window].
  double evolution_window = 100e-9;
  std::size_t evolution_samples = 64;
  TomographySettings tomography;
  std::size_t integrator_steps = 4096;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";

  void validate() const;
};

PipelineConfig config_from_json(const io::Json& j);
io::Json to_json(const PipelineConfig& cfg);

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  std::vector<std::string> outputs;
};

struct RunManifest {
  int schema_version = 1;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<StageRecord> stages;
  /// Every file written, relative to the output directory.
  std::vector<std::string> outputs;
};

io::Json to_json(const RunManifest& m);

/// Fixed column schema of a figure id: fig5, fig6-right, fig7, fig9 and
/// channeling. Throws ConfigError for an unknown id.
const std::vector<std::string>& figure_columns(const std::string& figure_id);

/// Runs every stage and writes manifest.json into cfg.out_dir. Stage
/// failures are rethrown with the stage name prefixed.
RunManifest run_pipeline(const PipelineConfig& cfg, unsigned workers = 1);

}  // namespace channelion::pipeline
