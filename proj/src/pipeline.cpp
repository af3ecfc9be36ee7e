#include "channelion/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "channelion/entanglement.hpp"
#include "channelion/rng.hpp"
#include "channelion/tomography.hpp"
#include "channelion/version.hpp"

namespace channelion::pipeline {

namespace {

enum StageSeed : std::uint64_t { kBeamStage = 1, kTomographyStage = 4 };

template <class T>
T get_or(const io::Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("pipeline.") + key + ": " + e.what());
  }
}

template <class Fn>
void run_stage(const char* name, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("stage ") + name + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("stage ") + name + ": " + e.what());
  }
}

void check_nonempty(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw ConfigError(std::string("pipeline: ") + what + " must not be empty");
  for (double x : v)
    if (!std::isfinite(x) || x < 0) throw ConfigError(std::string("pipeline: ") + what + " must be finite and >= 0");
}

// Beam runs share one seed so that every (tilt, divergence) cell uses the
// same per-particle random numbers.
class BeamCache {
 public:
  BeamCache(const PipelineConfig& cfg, const channeling::ChannelField& field, unsigned workers)
      : cfg_(cfg), field_(field), workers_(workers) {}

  double fraction(double tilt_psi_c, double divergence_mrad) {
    const auto key = std::make_pair(tilt_psi_c, divergence_mrad);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    channeling::BeamConfig b = cfg_.beam;
    b.tilt = tilt_psi_c * channeling::critical_angle(b.energy, cfg_.geometry);
    b.divergence = 1e-3 * divergence_mrad;
    b.seed = rng::derive(cfg_.seed, {kBeamStage});
    channeling::IntegratorOptions opt;
    opt.steps = cfg_.integrator_steps;
    const auto r = channeling::simulate_beam(b, field_, workers_, opt);
    channeled_[key] = r.summary.channeled;
    return cache_[key] = r.summary.channeled_fraction;
  }

  std::size_t channeled(double tilt_psi_c, double divergence_mrad) {
    fraction(tilt_psi_c, divergence_mrad);
    return channeled_.at({tilt_psi_c, divergence_mrad});
  }

 private:
  const PipelineConfig& cfg_;
  const channeling::ChannelField& field_;
  unsigned workers_;
  std::map<std::pair<double, double>, double> cache_;
  std::map<std::pair<double, double>, std::size_t> channeled_;
};

}  // namespace

Calibration default_calibration() { return {{0.0, 0.71}, {0.1, 0.71}, {1.0, 0.0}}; }

void validate_calibration(const Calibration& calibration) {
  if (calibration.empty()) throw ConfigError("calibration must have at least one anchor");
  for (std::size_t i = 0; i < calibration.size(); ++i) {
    const auto [t, p] = calibration[i];
    if (!std::isfinite(t)) throw ConfigError("calibration tilts must be finite");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("calibration p values must lie in [0, 1]");
    if (i > 0 && !(t > calibration[i - 1].first))
      throw ConfigError("calibration tilts must be strictly increasing");
  }
}

double map_tilt_to_p(double tilt, const Calibration& calibration, double channeled_fraction) {
  validate_calibration(calibration);
  if (!(tilt >= 0)) throw DomainError("map_tilt_to_p: tilt must be >= 0");
  if (!(channeled_fraction >= 0.0 && channeled_fraction <= 1.0))
    throw DomainError("map_tilt_to_p: channeled fraction must lie in [0, 1]");
  double base;
  if (tilt <= calibration.front().first) {
    base = calibration.front().second;
  } else if (tilt >= calibration.back().first) {
    base = calibration.back().second;
  } else {
    auto hi = std::upper_bound(calibration.begin(), calibration.end(), tilt,
                               [](double t, const auto& a) { return t < a.first; });
    auto lo = hi - 1;
    const double w = (tilt - lo->first) / (hi->first - lo->first);
    base = lo->second + w * (hi->second - lo->second);
  }
  return std::clamp(base * channeled_fraction, 0.0, 1.0);
}

void PipelineConfig::validate() const {
  geometry.validate();
  beam.validate();
  validate_calibration(calibration);
  check_nonempty(tilts_psi_c, "tilts_psi_c");
  check_nonempty(divergences_mrad, "divergences_mrad");
  check_nonempty(b0_tesla, "b0_tesla");
  if (!(evolution_window > 0)) throw ConfigError("pipeline: evolution_window must be > 0");
  if (evolution_samples == 0) throw ConfigError("pipeline: evolution_samples must be >= 1");
  if (!(tomography.n_scale >= 1)) throw ConfigError("pipeline: tomography.n_scale must be >= 1");
  if (tomography.iterations == 0) throw ConfigError("pipeline: tomography.iterations must be >= 1");
  if (!(tomography.tilt_psi_c >= 0)) throw ConfigError("pipeline: tomography.tilt_psi_c must be >= 0");
  if (integrator_steps == 0) throw ConfigError("pipeline: integrator_steps must be >= 1");
}

PipelineConfig config_from_json(const io::Json& j) {
  io::require_keys(j,
                   {"schema", "geometry", "beam", "hyperfine", "calibration", "tilts_psi_c",
                    "divergences_mrad", "b0_tesla", "evolution_window", "evolution_samples",
                    "tomography", "integrator_steps", "seed", "out"},
                   "pipeline");
  PipelineConfig c;
  if (j.contains("geometry")) c.geometry = io::geometry_from_json(j.at("geometry"));
  if (j.contains("beam")) {
    io::require_keys(j.at("beam"), {"energy", "n_particles", "entry", "thermal"}, "pipeline.beam");
    c.beam = io::beam_from_json(j.at("beam"), c.geometry);
  }
  if (j.contains("hyperfine")) c.hyperfine = io::hyperfine_from_json(j.at("hyperfine"));
  if (j.contains("calibration")) {
    c.calibration.clear();
    for (const auto& a : j.at("calibration")) {
      if (!a.is_array() || a.size() != 2) throw ConfigError("pipeline.calibration entries are [tilt, p]");
      c.calibration.emplace_back(a[0].get<double>(), a[1].get<double>());
    }
  }
  c.tilts_psi_c = get_or(j, "tilts_psi_c", c.tilts_psi_c);
  c.divergences_mrad = get_or(j, "divergences_mrad", c.divergences_mrad);
  c.b0_tesla = get_or(j, "b0_tesla", c.b0_tesla);
  c.evolution_window = get_or(j, "evolution_window", c.evolution_window);
  c.evolution_samples = get_or(j, "evolution_samples", c.evolution_samples);
  if (j.contains("tomography")) {
    const auto& t = j.at("tomography");
    io::require_keys(t, {"n_scale", "iterations", "tilt_psi_c", "posterior_weighting"},
                     "pipeline.tomography");
    c.tomography.n_scale = get_or(t, "n_scale", c.tomography.n_scale);
    c.tomography.iterations = get_or(t, "iterations", c.tomography.iterations);
    c.tomography.tilt_psi_c = get_or(t, "tilt_psi_c", c.tomography.tilt_psi_c);
    c.tomography.posterior_weighting = get_or(t, "posterior_weighting", c.tomography.posterior_weighting);
  }
  c.integrator_steps = get_or(j, "integrator_steps", c.integrator_steps);
  c.seed = get_or(j, "seed", c.seed);
  if (j.contains("out")) c.out_dir = get_or<std::string>(j, "out", "out");
  c.validate();
  return c;
}

io::Json to_json(const PipelineConfig& c) {
  io::Json cal = io::Json::array();
  for (const auto& [t, p] : c.calibration) cal.push_back({t, p});
  return io::Json{
      {"schema", kSchemaVersion},
      {"geometry", io::to_json(c.geometry)},
      {"beam",
       {{"energy", c.beam.energy},
        {"n_particles", c.beam.n_particles},
        {"entry", c.beam.entry == channeling::EntryDistribution::kUniform ? "uniform" : "point"},
        {"thermal", c.beam.thermal == channeling::ThermalMode::kFrozenStrings ? "frozen" : "static"}}},
      {"hyperfine", io::to_json(c.hyperfine)},
      {"calibration", cal},
      {"tilts_psi_c", c.tilts_psi_c},
      {"divergences_mrad", c.divergences_mrad},
      {"b0_tesla", c.b0_tesla},
      {"evolution_window", c.evolution_window},
      {"evolution_samples", c.evolution_samples},
      {"tomography",
       {{"n_scale", c.tomography.n_scale},
        {"iterations", c.tomography.iterations},
        {"tilt_psi_c", c.tomography.tilt_psi_c},
        {"posterior_weighting", c.tomography.posterior_weighting}}},
      {"integrator_steps", c.integrator_steps},
      {"seed", c.seed}};
}

io::Json to_json(const RunManifest& m) {
  io::Json stages = io::Json::array();
  for (const auto& s : m.stages)
    stages.push_back({{"name", s.name}, {"seconds", s.seconds}, {"outputs", s.outputs}});
  return io::Json{{"schema_version", m.schema_version},
                  {"config_hash", m.config_hash},
                  {"seed", m.seed},
                  {"version", m.version},
                  {"stages", stages},
                  {"outputs", m.outputs},
                  {"model_note",
                   "Werner p = calibration(tilt) x channeled fraction; interpretation, not a "
                   "measured relation"}};
}

const std::vector<std::string>& figure_columns(const std::string& figure_id) {
  static const std::map<std::string, std::vector<std::string>> kColumns{
      {"channeling",
       {"tilt_frac", "delta_mrad", "n_particles", "channeled", "channeled_fraction", "werner_p",
        "concurrence"}},
      {"fig5", {"row", "col", "value"}},
      {"fig6-right", {"delta_mrad", "tilt_frac", "concurrence"}},
      {"fig7", {"B0_T", "tilt_frac", "werner_p", "eof"}},
      {"fig9", {"iteration", "fidelity"}},
  };
  auto it = kColumns.find(figure_id);
  if (it == kColumns.end()) throw ConfigError("unknown figure id '" + figure_id + "'");
  return it->second;
}

RunManifest run_pipeline(const PipelineConfig& cfg, unsigned workers) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  RunManifest manifest;
  manifest.schema_version = kSchemaVersion;
  manifest.config_hash = io::hex64(io::canonical_hash(to_json(cfg)));
  manifest.seed = cfg.seed;
  manifest.version = kVersion;

  auto timed = [&](const char* name, auto&& body) {
    StageRecord rec;
    rec.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    run_stage(name, [&] { body(rec); });
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& o : rec.outputs) manifest.outputs.push_back(o);
    manifest.stages.push_back(std::move(rec));
  };
  auto path = [&](const std::string& name) { return cfg.out_dir / name; };

  std::optional<channeling::ChannelField> field;
  std::optional<BeamCache> beams;
  timed("setup", [&](StageRecord&) {
    field.emplace(cfg.geometry);
    beams.emplace(cfg, *field, workers);
  });

  timed("channeling", [&](StageRecord& rec) {
    io::CsvWriter chan(path("channeling.csv"), figure_columns("channeling"));
    io::CsvWriter fig6(path("fig6-right.csv"), figure_columns("fig6-right"));
    for (double tilt : cfg.tilts_psi_c)
      for (double delta : cfg.divergences_mrad) {
        const double f = beams->fraction(tilt, delta);
        const double p = map_tilt_to_p(tilt, cfg.calibration, f);
        const double c = entangle::concurrence(entangle::werner_state({p, 0.0, +1}));
        chan.row({tilt, delta, cfg.beam.n_particles, beams->channeled(tilt, delta), f, p, c});
        fig6.row({delta, tilt, c});
      }
    chan.close();
    fig6.close();
    rec.outputs = {"channeling.csv", "fig6-right.csv"};
  });

  const double tomo_tilt = cfg.tomography.tilt_psi_c;
  double tomo_p = 0.0;
  timed("fig5", [&](StageRecord& rec) {
    tomo_p = map_tilt_to_p(tomo_tilt, cfg.calibration, beams->fraction(tomo_tilt, 0.0));
    const auto rho = entangle::werner_state({tomo_p, 0.0, +1});
    io::CsvWriter csv(path("fig5.csv"), figure_columns("fig5"));
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) csv.row({r, c, rho(r, c).real()});
    csv.close();
    rec.outputs = {"fig5.csv"};
  });

  timed("fig7", [&](StageRecord& rec) {
    io::CsvWriter csv(path("fig7.csv"), figure_columns("fig7"));
    const DensityMatrix electron(PureState(CVector::Constant(2, Complex(std::sqrt(0.5), 0.0))));
    const int keep[] = {1, 2};
    for (double b0 : cfg.b0_tesla) {
      const spin::Propagator prop(spin::build_hamiltonian(spin::SpinSystem::from_field(b0, cfg.hyperfine)));
      for (double tilt : cfg.tilts_psi_c) {
        const double p = map_tilt_to_p(tilt, cfg.calibration, beams->fraction(tilt, 0.0));
        const CMatrix rho0 = kron(electron.matrix(), entangle::werner_state({p, 0.0, +1}).matrix());
        CMatrix avg = CMatrix::Zero(4, 4);
        for (std::size_t k = 1; k <= cfg.evolution_samples; ++k) {
          const double t = cfg.evolution_window * static_cast<double>(k) /
                           static_cast<double>(cfg.evolution_samples);
          const CMatrix u = prop.unitary(t);
          avg += partial_trace(u * rho0 * u.adjoint(), keep);
        }
        avg /= static_cast<double>(cfg.evolution_samples);
        const double eof = entangle::entanglement_of_formation(entangle::concurrence(DensityMatrix(avg)));
        csv.row({b0, tilt, p, eof});
      }
    }
    csv.close();
    rec.outputs = {"fig7.csv"};
  });

  timed("fig9", [&](StageRecord& rec) {
    tomo::McOptions opt;
    opt.iterations = cfg.tomography.iterations;
    opt.posterior_weighting = cfg.tomography.posterior_weighting;
    opt.workers = workers;
    const auto truth = entangle::werner_state({tomo_p, 0.0, +1});
    const auto target = entangle::bell_state(entangle::Bell::kPsiPlus);
    const auto stats = tomo::mc_fidelity(truth, target, cfg.tomography.n_scale,
                                         rng::derive(cfg.seed, {kTomographyStage}), opt);
    io::CsvWriter csv(path("fig9.csv"), figure_columns("fig9"));
    for (std::size_t i = 0; i < stats.fidelities.size(); ++i) csv.row({i, stats.fidelities[i]});
    csv.row({"mean", stats.mean});
    csv.row({"std", stats.std_dev});
    csv.close();
    rec.outputs = {"fig9.csv"};
  });

  manifest.outputs.push_back("manifest.json");
  io::write_json_file(path("manifest.json"), to_json(manifest));
  return manifest;
}

}  // namespace channelion::pipeline
