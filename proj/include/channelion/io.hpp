#pragma once

// JSON (de)serialisation of the library types and deterministic CSV output.
// Every reader rejects unknown keys.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "channelion/channeling.hpp"
#include "channelion/entanglement.hpp"
#include "channelion/percolation.hpp"
#include "channelion/quantum_state.hpp"
#include "channelion/spin_dynamics.hpp"
#include "channelion/tomography.hpp"

namespace channelion::io {

using Json = nlohmann::json;

/// Throws ConfigError if `j` is not an object or carries a key outside
/// `allowed`. `where` prefixes the message.
void require_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                  std::string_view where);

/// Reads and parses a JSON file; checks `schema` when `expect_schema` is set.
Json read_json_file(const std::filesystem::path& path, bool expect_schema = true);
void write_json_file(const std::filesystem::path& path, const Json& j);

/// 64-bit FNV-1a of the compact dump. Object keys are sorted on dump, so
/// the hash does not depend on key order in the source file.
std::uint64_t canonical_hash(const Json& j);
std::string hex64(std::uint64_t v);

/// Shortest round-trip formatting ("%.17g").
std::string format_double(double v);

/// CSV writer with fixed number formatting.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  /// Each cell is either a number or a literal string.
  struct Cell {
    Cell(double v) : text(format_double(v)) {}
    Cell(int v) : text(std::to_string(v)) {}
    Cell(std::size_t v) : text(std::to_string(v)) {}
    Cell(const char* s) : text(s) {}
    Cell(std::string s) : text(std::move(s)) {}
    std::string text;
  };
  void row(std::initializer_list<Cell> cells);
  void close();

 private:
  std::FILE* file_ = nullptr;
  std::size_t columns_ = 0;
  std::filesystem::path path_;
};

// -- channeling --------------------------------------------------------------
channeling::ChannelGeometry geometry_from_json(const Json& j);
Json to_json(const channeling::ChannelGeometry& g);

/// Beam keys: energy, tilt (rad) or tilt_psi_c (fraction of the critical
/// angle, needs the geometry), divergence, n_particles, entry, seed, thermal.
channeling::BeamConfig beam_from_json(const Json& j, const channeling::ChannelGeometry& geom);
Json to_json(const channeling::BeamConfig& b);
Json to_json(const channeling::Histogram& h);
Json to_json(const channeling::BeamSummary& s);
void write_histogram_csv(const std::filesystem::path& path, const channeling::Histogram& h);

// -- quantum states ----------------------------------------------------------
/// {"dim": d, "data": [re00, im00, re01, im01, ...]} in row-major order.
Json to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const Json& j);
Json to_json(const PureState& psi);
PureState pure_from_json(const Json& j);

/// State spec: {"werner": {"p", "phi", "sign"}} | {"bell": "phi+" ...} |
/// {"density": <matrix>} | {"pure": <vector>}.
DensityMatrix state_from_spec(const Json& j);
PureState pure_from_spec(const Json& j);
entangle::Bell parse_bell(std::string_view name);

// -- spins -------------------------------------------------------------------
/// {"b0", "hyperfine": {...}} in tesla and MHz, or explicit angular
/// frequencies omega_e, omega_h, omega_si, a_h, b_h, a_si, b_si in rad/s.
spin::SpinSystem spin_system_from_json(const Json& j);
/// {"a_h", "b_h", "a_si", "b_si"} in MHz.
spin::HyperfineMHz hyperfine_from_json(const Json& j);
Json to_json(const spin::HyperfineMHz& hf);
Json to_json(const spin::SpinSystem& s);
spin::PulseSequence sequence_from_json(const Json& j);
Json to_json(const spin::PulseSequence& seq);
/// {"product": ["+x", "0", "1"]} with single-spin labels 0, 1, +x, -x, +y,
/// -y, or a state spec.
DensityMatrix spin_state_from_json(const Json& j);

// -- tomography --------------------------------------------------------------
Json to_json(const tomo::TomographyRecord& r);
tomo::TomographyRecord record_from_json(const Json& j);
Json to_json(const tomo::FidelityStats& s, bool include_samples = false);

// -- percolation -------------------------------------------------------------
/// {"lattice": "square", "side": n, "amplitude": p} or
/// {"lattice": "explicit", "nodes": n, "edges": [[a, b, p], ...], "terminals": [a, b]}.
percolation::EntanglementNetwork network_from_json(const Json& j);
percolation::RepeaterConfig repeater_from_json(const Json& j);
Json to_json(const percolation::RepeaterTiming& t);

}  // namespace channelion::io
