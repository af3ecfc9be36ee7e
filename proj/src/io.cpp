#include "channelion/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "channelion/version.hpp"

namespace channelion::io {

namespace {

template <class T>
T get(const Json& j, const char* key, std::string_view where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, std::string_view where) {
  if (!j.contains(key)) return fallback;
  return get<T>(j, key, where);
}

const char* entry_name(channeling::EntryDistribution e) {
  return e == channeling::EntryDistribution::kUniform ? "uniform" : "point";
}

const char* thermal_name(channeling::ThermalMode m) {
  return m == channeling::ThermalMode::kFrozenStrings ? "frozen" : "static";
}

CVector single_spin(std::string_view label) {
  constexpr double s = 0.70710678118654752440;
  CVector v(2);
  if (label == "0")
    v << 1.0, 0.0;
  else if (label == "1")
    v << 0.0, 1.0;
  else if (label == "+x")
    v << s, s;
  else if (label == "-x")
    v << s, -s;
  else if (label == "+y")
    v << s, Complex(0.0, s);
  else if (label == "-y")
    v << s, Complex(0.0, -s);
  else
    throw ConfigError("unknown single-spin state '" + std::string(label) + "'");
  return v;
}

Json complex_array(const CVector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    a.push_back(v(i).real());
    a.push_back(v(i).imag());
  }
  return a;
}

}  // namespace

void require_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                  std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

Json read_json_file(const std::filesystem::path& path, bool expect_schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  if (expect_schema) {
    if (!j.is_object() || !j.contains("schema"))
      throw ConfigError(path.string() + ": missing 'schema' key");
    if (j.at("schema") != kSchemaVersion)
      throw ConfigError(path.string() + ": unsupported schema " + j.at("schema").dump());
  }
  return j;
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::uint64_t canonical_hash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : columns_(header.size()), path_(path) {
  file_ = std::fopen(path.string().c_str(), "w");
  if (!file_) throw ConfigError("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i)
    std::fprintf(file_, "%s%s", i ? "," : "", header[i].c_str());
  std::fputc('\n', file_);
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(file_);
}

void CsvWriter::row(std::initializer_list<Cell> cells) {
  if (cells.size() != columns_)
    throw ConfigError("CSV row width mismatch in " + path_.string());
  std::size_t i = 0;
  for (const auto& c : cells) std::fprintf(file_, "%s%s", i++ ? "," : "", c.text.c_str());
  std::fputc('\n', file_);
}

void CsvWriter::close() {
  if (file_ && std::fclose(file_) != 0) {
    file_ = nullptr;
    throw ConfigError("error closing " + path_.string());
  }
  file_ = nullptr;
}

// -- channeling --------------------------------------------------------------

channeling::ChannelGeometry geometry_from_json(const Json& j) {
  constexpr std::string_view w = "geometry";
  require_keys(j,
               {"z1", "z2", "string_period", "screening_radius", "strings", "thickness",
                "thermal_amplitude", "moliere_alphas", "moliere_betas", "barrier_distance"},
               w);
  channeling::ChannelGeometry g;
  g.z1 = get_or(j, "z1", g.z1, w);
  g.z2 = get_or(j, "z2", g.z2, w);
  g.screening_radius = j.contains("screening_radius")
                           ? get<double>(j, "screening_radius", w)
                           : channeling::thomas_fermi_screening_radius(g.z2);
  g.string_period = get_or(j, "string_period", g.string_period, w);
  g.thickness = get_or(j, "thickness", g.thickness, w);
  g.thermal_amplitude = get_or(j, "thermal_amplitude", g.thermal_amplitude, w);
  g.moliere_alphas = get_or(j, "moliere_alphas", g.moliere_alphas, w);
  g.moliere_betas = get_or(j, "moliere_betas", g.moliere_betas, w);
  if (j.contains("barrier_distance")) g.barrier_distance = get<double>(j, "barrier_distance", w);
  if (j.contains("strings")) {
    g.strings.clear();
    for (const auto& p : get<std::vector<std::array<double, 2>>>(j, "strings", w))
      g.strings.push_back({p[0], p[1]});
  }
  g.validate();
  return g;
}

Json to_json(const channeling::ChannelGeometry& g) {
  Json strings = Json::array();
  for (const auto& s : g.strings) strings.push_back({s.x, s.y});
  Json j{{"z1", g.z1},
         {"z2", g.z2},
         {"string_period", g.string_period},
         {"screening_radius", g.screening_radius},
         {"strings", strings},
         {"thickness", g.thickness},
         {"thermal_amplitude", g.thermal_amplitude},
         {"moliere_alphas", g.moliere_alphas},
         {"moliere_betas", g.moliere_betas}};
  if (g.barrier_distance) j["barrier_distance"] = *g.barrier_distance;
  return j;
}

channeling::BeamConfig beam_from_json(const Json& j, const channeling::ChannelGeometry& geom) {
  constexpr std::string_view w = "beam";
  require_keys(j,
               {"energy", "tilt", "tilt_psi_c", "divergence", "divergence_mrad", "n_particles",
                "entry", "seed", "thermal"},
               w);
  if (j.contains("tilt") && j.contains("tilt_psi_c"))
    throw ConfigError("beam: give either tilt or tilt_psi_c, not both");
  if (j.contains("divergence") && j.contains("divergence_mrad"))
    throw ConfigError("beam: give either divergence or divergence_mrad, not both");
  channeling::BeamConfig b;
  b.energy = get_or(j, "energy", b.energy, w);
  if (j.contains("tilt")) b.tilt = get<double>(j, "tilt", w);
  if (j.contains("tilt_psi_c"))
    b.tilt = get<double>(j, "tilt_psi_c", w) * channeling::critical_angle(b.energy, geom);
  b.divergence = get_or(j, "divergence", b.divergence, w);
  if (j.contains("divergence_mrad")) b.divergence = 1e-3 * get<double>(j, "divergence_mrad", w);
  b.n_particles = get_or(j, "n_particles", b.n_particles, w);
  b.seed = get_or(j, "seed", b.seed, w);
  const auto entry = get_or<std::string>(j, "entry", "uniform", w);
  if (entry == "uniform")
    b.entry = channeling::EntryDistribution::kUniform;
  else if (entry == "point")
    b.entry = channeling::EntryDistribution::kPoint;
  else
    throw ConfigError("beam.entry must be 'uniform' or 'point'");
  const auto thermal = get_or<std::string>(j, "thermal", "frozen", w);
  if (thermal == "frozen")
    b.thermal = channeling::ThermalMode::kFrozenStrings;
  else if (thermal == "static")
    b.thermal = channeling::ThermalMode::kStatic;
  else
    throw ConfigError("beam.thermal must be 'frozen' or 'static'");
  b.validate();
  return b;
}

Json to_json(const channeling::BeamConfig& b) {
  return Json{{"energy", b.energy},        {"tilt", b.tilt},
              {"divergence", b.divergence}, {"n_particles", b.n_particles},
              {"entry", entry_name(b.entry)}, {"seed", b.seed},
              {"thermal", thermal_name(b.thermal)}};
}

Json to_json(const channeling::Histogram& h) {
  return Json{{"edges", h.edges},
              {"counts", h.counts},
              {"underflow", h.underflow},
              {"overflow", h.overflow}};
}

Json to_json(const channeling::BeamSummary& s) {
  return Json{{"n_particles", s.n_particles},
              {"channeled", s.channeled},
              {"channeled_fraction", s.channeled_fraction},
              {"rms_spot_radius_nm", s.rms_spot_radius},
              {"exit_angle_x", to_json(s.exit_angle_x)},
              {"exit_position_x", to_json(s.exit_position_x)}};
}

void write_histogram_csv(const std::filesystem::path& path, const channeling::Histogram& h) {
  CsvWriter csv(path, {"bin_lo", "bin_hi", "count"});
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    csv.row({h.edges[i], h.edges[i + 1], static_cast<std::size_t>(h.counts[i])});
  csv.close();
}

// -- quantum states ----------------------------------------------------------

Json to_json(const DensityMatrix& rho) {
  Json data = Json::array();
  const auto& m = rho.matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      data.push_back(m(r, c).real());
      data.push_back(m(r, c).imag());
    }
  return Json{{"dim", m.rows()}, {"data", data}};
}

DensityMatrix density_from_json(const Json& j) {
  constexpr std::string_view w = "density";
  require_keys(j, {"dim", "data"}, w);
  const auto dim = get<std::size_t>(j, "dim", w);
  const auto data = get<std::vector<double>>(j, "data", w);
  if (dim == 0 || data.size() != 2 * dim * dim)
    throw ConfigError("density: data must hold 2 * dim^2 numbers");
  const auto d = static_cast<Eigen::Index>(dim);
  CMatrix m(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) {
      const auto k = static_cast<std::size_t>(2 * (r * d + c));
      m(r, c) = Complex(data[k], data[k + 1]);
    }
  return DensityMatrix(std::move(m));
}

Json to_json(const PureState& psi) {
  return Json{{"dim", psi.dim()}, {"data", complex_array(psi.amplitudes())}};
}

PureState pure_from_json(const Json& j) {
  constexpr std::string_view w = "pure";
  require_keys(j, {"dim", "data"}, w);
  const auto dim = get<std::size_t>(j, "dim", w);
  const auto data = get<std::vector<double>>(j, "data", w);
  if (dim == 0 || data.size() != 2 * dim) throw ConfigError("pure: data must hold 2 * dim numbers");
  CVector v(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) v(static_cast<Eigen::Index>(i)) = Complex(data[2 * i], data[2 * i + 1]);
  return PureState(std::move(v));
}

entangle::Bell parse_bell(std::string_view name) {
  if (name == "phi+") return entangle::Bell::kPhiPlus;
  if (name == "phi-") return entangle::Bell::kPhiMinus;
  if (name == "psi+") return entangle::Bell::kPsiPlus;
  if (name == "psi-") return entangle::Bell::kPsiMinus;
  throw ConfigError("unknown Bell state '" + std::string(name) + "'");
}

DensityMatrix state_from_spec(const Json& j) {
  constexpr std::string_view w = "state";
  require_keys(j, {"werner", "bell", "density", "pure"}, w);
  if (j.size() != 1) throw ConfigError("state: give exactly one of werner, bell, density, pure");
  if (j.contains("werner")) {
    const auto& p = j.at("werner");
    require_keys(p, {"p", "phi", "sign"}, "state.werner");
    entangle::WernerParams wp;
    wp.p = get<double>(p, "p", "state.werner");
    wp.phi = get_or(p, "phi", 0.0, "state.werner");
    wp.sign = get_or(p, "sign", 1, "state.werner");
    return entangle::werner_state(wp);
  }
  if (j.contains("density")) return density_from_json(j.at("density"));
  return DensityMatrix(pure_from_spec(j));
}

PureState pure_from_spec(const Json& j) {
  require_keys(j, {"bell", "pure"}, "pure state");
  if (j.contains("bell")) return entangle::bell_state(parse_bell(get<std::string>(j, "bell", "state")));
  if (j.contains("pure")) return pure_from_json(j.at("pure"));
  throw ConfigError("pure state: give bell or pure");
}

// -- spins -------------------------------------------------------------------

spin::SpinSystem spin_system_from_json(const Json& j) {
  constexpr std::string_view w = "spin";
  require_keys(j,
               {"b0", "hyperfine", "omega_e", "omega_h", "omega_si", "a_h", "b_h", "a_si",
                "b_si"},
               w);
  const double b0 = get_or(j, "b0", 1.0, w);
  if (j.contains("omega_e")) {
    if (j.contains("hyperfine")) throw ConfigError("spin: hyperfine and explicit frequencies conflict");
    spin::SpinSystem s;
    s.b0 = b0;
    s.omega_e = get<double>(j, "omega_e", w);
    s.omega_h = get<double>(j, "omega_h", w);
    s.omega_si = get<double>(j, "omega_si", w);
    s.a_h = get_or(j, "a_h", 0.0, w);
    s.b_h = get_or(j, "b_h", 0.0, w);
    s.a_si = get_or(j, "a_si", 0.0, w);
    s.b_si = get_or(j, "b_si", 0.0, w);
    s.validate();
    return s;
  }
  for (const char* k : {"omega_h", "omega_si", "a_h", "b_h", "a_si", "b_si"})
    if (j.contains(k)) throw ConfigError(std::string("spin: '") + k + "' needs omega_e");
  const spin::HyperfineMHz hf =
      j.contains("hyperfine") ? hyperfine_from_json(j.at("hyperfine")) : spin::HyperfineMHz{};
  return spin::SpinSystem::from_field(b0, hf);
}

spin::HyperfineMHz hyperfine_from_json(const Json& h) {
  constexpr std::string_view hw = "hyperfine";
  require_keys(h, {"a_h", "b_h", "a_si", "b_si"}, hw);
  spin::HyperfineMHz hf;
  hf.a_h = get_or(h, "a_h", hf.a_h, hw);
  hf.b_h = get_or(h, "b_h", hf.b_h, hw);
  hf.a_si = get_or(h, "a_si", hf.a_si, hw);
  if (h.contains("b_si")) hf.b_si = get<double>(h, "b_si", hw);
  return hf;
}

Json to_json(const spin::HyperfineMHz& hf) {
  Json j{{"a_h", hf.a_h}, {"b_h", hf.b_h}, {"a_si", hf.a_si}};
  if (hf.b_si) j["b_si"] = *hf.b_si;
  return j;
}

Json to_json(const spin::SpinSystem& s) {
  return Json{{"b0", s.b0},     {"omega_e", s.omega_e}, {"omega_h", s.omega_h},
              {"omega_si", s.omega_si}, {"a_h", s.a_h}, {"b_h", s.b_h},
              {"a_si", s.a_si}, {"b_si", s.b_si}};
}

spin::PulseSequence sequence_from_json(const Json& j) {
  constexpr std::string_view w = "sequence";
  require_keys(j, {"steps", "meiboom_gill", "repetitions", "phase_inversion"}, w);
  spin::PulseSequence seq;
  if (j.contains("steps") == j.contains("meiboom_gill"))
    throw ConfigError("sequence: give exactly one of steps or meiboom_gill");
  if (j.contains("meiboom_gill")) {
    const auto& m = j.at("meiboom_gill");
    constexpr std::string_view mw = "sequence.meiboom_gill";
    require_keys(m, {"tau", "n", "target", "close"}, mw);
    seq = spin::PulseSequence::meiboom_gill(
        get<double>(m, "tau", mw), get<std::size_t>(m, "n", mw),
        spin::parse_target(get_or<std::string>(m, "target", "e", mw)),
        get_or(m, "close", false, mw));
  } else {
    for (const auto& s : j.at("steps")) {
      require_keys(s, {"free", "target", "axis", "angle"}, "sequence.steps[]");
      if (s.contains("free")) {
        if (s.size() != 1) throw ConfigError("sequence step: 'free' stands alone");
        seq.steps.push_back(spin::FreeEvolution{get<double>(s, "free", "sequence.steps[]")});
      } else {
        seq.steps.push_back(spin::Rotation{
            spin::parse_target(get<std::string>(s, "target", "sequence.steps[]")),
            spin::parse_axis(get<std::string>(s, "axis", "sequence.steps[]")),
            get<double>(s, "angle", "sequence.steps[]")});
      }
    }
  }
  seq.repetitions = get_or(j, "repetitions", seq.repetitions, w);
  seq.phase_inversion = get_or(j, "phase_inversion", seq.phase_inversion, w);
  seq.validate();
  return seq;
}

Json to_json(const spin::PulseSequence& seq) {
  Json steps = Json::array();
  for (const auto& s : seq.steps) {
    if (const auto* f = std::get_if<spin::FreeEvolution>(&s)) {
      steps.push_back({{"free", f->duration}});
    } else {
      const auto& r = std::get<spin::Rotation>(s);
      steps.push_back({{"target", spin::target_name(r.target)},
                       {"axis", spin::axis_name(r.axis)},
                       {"angle", r.angle}});
    }
  }
  return Json{{"steps", steps},
              {"repetitions", seq.repetitions},
              {"phase_inversion", seq.phase_inversion}};
}

DensityMatrix spin_state_from_json(const Json& j) {
  if (j.is_object() && j.contains("product")) {
    require_keys(j, {"product"}, "initial");
    CVector v = CVector::Ones(1);
    for (const auto& label : get<std::vector<std::string>>(j, "product", "initial")) {
      CVector next = kron(v, single_spin(label));
      v = std::move(next);
    }
    return DensityMatrix(PureState(std::move(v)));
  }
  return state_from_spec(j);
}

// -- tomography --------------------------------------------------------------

Json to_json(const tomo::TomographyRecord& r) {
  Json j{{"labels", r.labels}, {"counts", r.counts}, {"n_scale", r.n_scale}, {"seed", r.seed}};
  if (r.truth) j["truth"] = to_json(*r.truth);
  return j;
}

tomo::TomographyRecord record_from_json(const Json& j) {
  constexpr std::string_view w = "record";
  require_keys(j, {"labels", "counts", "n_scale", "seed", "truth"}, w);
  tomo::TomographyRecord r;
  r.labels = get_or<std::vector<std::string>>(j, "labels", {}, w);
  for (const auto& c : j.at("counts")) {
    if (!c.is_number_integer() || c.get<std::int64_t>() < 0)
      throw ConfigError("record.counts must be nonnegative integers");
    r.counts.push_back(c.get<std::uint64_t>());
  }
  r.n_scale = get_or(j, "n_scale", 0.0, w);
  r.seed = get_or<std::uint64_t>(j, "seed", 0, w);
  if (j.contains("truth")) r.truth = density_from_json(j.at("truth"));
  r.validate(tomo::ProjectorSet::standard());
  return r;
}

Json to_json(const tomo::FidelityStats& s, bool include_samples) {
  Json j{{"mean", s.mean},
         {"std", s.std_dev},
         {"iterations", s.iterations},
         {"non_converged", s.non_converged}};
  if (include_samples) {
    j["fidelities"] = s.fidelities;
    j["weights"] = s.weights;
  }
  return j;
}

// -- percolation -------------------------------------------------------------

percolation::EntanglementNetwork network_from_json(const Json& j) {
  constexpr std::string_view w = "network";
  require_keys(j, {"lattice", "side", "amplitude", "nodes", "edges", "terminals"}, w);
  const auto kind = percolation::parse_lattice(get<std::string>(j, "lattice", w));
  if (kind != percolation::Lattice::kExplicit) {
    for (const char* k : {"nodes", "edges", "terminals"})
      if (j.contains(k)) throw ConfigError(std::string("network: '") + k + "' needs lattice explicit");
    return percolation::EntanglementNetwork::lattice(kind, get<std::size_t>(j, "side", w),
                                                     get<double>(j, "amplitude", w));
  }
  for (const char* k : {"side", "amplitude"})
    if (j.contains(k)) throw ConfigError(std::string("network: '") + k + "' is for lattices");
  std::vector<percolation::Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 3) throw ConfigError("network.edges entries are [a, b, p]");
    edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
  }
  const auto t = get<std::array<std::size_t, 2>>(j, "terminals", w);
  return percolation::EntanglementNetwork::graph(get<std::size_t>(j, "nodes", w), std::move(edges),
                                                 {t[0], t[1]});
}

percolation::RepeaterConfig repeater_from_json(const Json& j) {
  constexpr std::string_view w = "repeater";
  require_keys(j, {"total_length", "segment_length", "attenuation_length", "epsilon", "eta"}, w);
  percolation::RepeaterConfig c;
  c.total_length = get<double>(j, "total_length", w);
  c.segment_length = get<double>(j, "segment_length", w);
  c.attenuation_length = get<double>(j, "attenuation_length", w);
  if (j.contains("epsilon")) c.epsilon = get<double>(j, "epsilon", w);
  c.eta = get_or(j, "eta", c.eta, w);
  c.validate();
  return c;
}

Json to_json(const percolation::RepeaterTiming& t) {
  return Json{{"success_probability", t.success_probability},
              {"t_cc", t.t_cc},
              {"t_segment", t.t_segment},
              {"t_total", t.t_total}};
}

}  // namespace channelion::io
