// Command-line front end: `channelion <module> <action> ...`.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "channelion/channeling.hpp"
#include "channelion/entanglement.hpp"
#include "channelion/io.hpp"
#include "channelion/percolation.hpp"
#include "channelion/pipeline.hpp"
#include "channelion/spin_dynamics.hpp"
#include "channelion/tomography.hpp"
#include "channelion/version.hpp"

namespace fs = std::filesystem;
using channelion::ConfigError;
using channelion::NumericalError;
using channelion::io::Json;
namespace io = channelion::io;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
};

Json load(const std::string& path, std::initializer_list<std::string_view> keys,
          std::string_view where) {
  Json j = io::read_json_file(path);
  io::require_keys(j, keys, where);
  return j;
}

fs::path prepare(const std::string& out) {
  fs::path p(out);
  fs::create_directories(p);
  return p;
}

std::vector<double> parse_grid(const std::string& spec) {
  // lo:hi:n, inclusive endpoints.
  double lo = 0, hi = 0;
  long n = 0;
  char tail = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%ld%c", &lo, &hi, &n, &tail) != 3 || n < 1)
    throw ConfigError("grid must look like lo:hi:n with n >= 1, got '" + spec + "'");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

// -- pipeline ----------------------------------------------------------------

void pipeline_run(const Common& c) {
  auto cfg = channelion::pipeline::config_from_json(io::read_json_file(c.config));
  cfg.out_dir = c.out;
  if (c.seed) cfg.seed = *c.seed;
  const auto m = channelion::pipeline::run_pipeline(cfg, c.workers);
  std::cout << "config hash " << m.config_hash << ", " << m.outputs.size() << " files in "
            << cfg.out_dir.string() << '\n';
}

// -- channel -----------------------------------------------------------------

void channel_run(const Common& c) {
  namespace ch = channelion::channeling;
  const Json j = load(c.config, {"schema", "geometry", "beam", "steps"}, "channel");
  const auto geom = j.contains("geometry") ? io::geometry_from_json(j.at("geometry")) : ch::ChannelGeometry{};
  auto beam = io::beam_from_json(j.value("beam", Json::object()), geom);
  if (c.seed) beam.seed = *c.seed;
  ch::IntegratorOptions opt;
  opt.steps = j.value("steps", opt.steps);

  const auto t0 = std::chrono::steady_clock::now();
  const ch::ChannelField field(geom);
  const auto res = ch::simulate_beam(beam, field, c.workers, opt);
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto dir = prepare(c.out);
  io::write_histogram_csv(dir / "exit_angle_x.csv", res.summary.exit_angle_x);
  io::write_histogram_csv(dir / "exit_position_x.csv", res.summary.exit_position_x);
  Json summary{{"config", {{"geometry", io::to_json(geom)}, {"beam", io::to_json(beam)}, {"steps", opt.steps}}},
               {"seed", beam.seed},
               {"channeled_fraction", res.summary.channeled_fraction},
               {"channeled", res.summary.channeled},
               {"n_particles", res.summary.n_particles},
               {"rms_spot_radius_nm", res.summary.rms_spot_radius},
               {"critical_angle", ch::critical_angle(beam.energy, geom)},
               {"runtime_s", runtime}};
  io::write_json_file(dir / "summary.json", summary);
  std::cout << "channeled fraction " << res.summary.channeled_fraction << '\n';
}

// -- spins -------------------------------------------------------------------

void spins_evolve(const Common& c) {
  namespace sp = channelion::spin;
  const Json j = load(c.config, {"schema", "system", "initial", "sequence"}, "spins");
  const auto sys = io::spin_system_from_json(j.value("system", Json::object()));
  const auto rho0 = io::spin_state_from_json(j.at("initial"));
  const auto seq = io::sequence_from_json(j.at("sequence"));
  if (rho0.dim() != 8) throw ConfigError("spins: initial state must cover the three spins e, H, Si");
  const auto res = sp::run_sequence(rho0, seq, sp::build_hamiltonian(sys));

  const auto dir = prepare(c.out);
  io::CsvWriter csv(dir / "trace.csv", {"t", "sz_e", "sz_H", "sz_Si"});
  for (const auto& s : res.trace) csv.row({s.t, s.sz[0], s.sz[1], s.sz[2]});
  csv.close();
  io::write_json_file(dir / "final_state.json",
                      Json{{"system", io::to_json(sys)}, {"state", io::to_json(res.state)}});
}

// -- entangle ----------------------------------------------------------------

void entangle_werner(double p, double phi, int sign) {
  namespace en = channelion::entangle;
  const auto rho = en::werner_state({p, phi, sign});
  const double conc = en::concurrence(rho);
  std::cout << Json{{"state", io::to_json(rho)},
                    {"concurrence", conc},
                    {"eof", en::entanglement_of_formation(conc)}}
                   .dump(2)
            << '\n';
}

void entangle_sweep(const std::string& measure, const std::string& grid, const std::string& out) {
  namespace en = channelion::entangle;
  if (measure != "concurrence" && measure != "eof")
    throw ConfigError("--measure must be concurrence or eof");
  const auto ps = parse_grid(grid);
  const auto dir = prepare(out);
  io::CsvWriter csv(dir / ("werner_" + measure + ".csv"), {"p", measure});
  for (double p : ps) {
    const double conc = en::concurrence(en::werner_state({p, 0.0, +1}));
    csv.row({p, measure == "eof" ? en::entanglement_of_formation(conc) : conc});
  }
  csv.close();
}

// -- tomo --------------------------------------------------------------------

void tomo_simulate(const Common& c) {
  const Json j = load(c.config, {"schema", "state", "n_scale", "seed"}, "tomo simulate");
  const auto rho = io::state_from_spec(j.at("state"));
  const std::uint64_t seed = c.seed.value_or(j.value("seed", std::uint64_t{1}));
  const auto rec = channelion::tomo::simulate_counts(rho, j.value("n_scale", 1e4), seed);
  io::write_json_file(prepare(c.out) / "record.json", io::to_json(rec));
}

void tomo_reconstruct(const Common& c) {
  namespace tm = channelion::tomo;
  const Json j = load(c.config, {"schema", "record", "method"}, "tomo reconstruct");
  const auto rec = io::record_from_json(j.at("record"));
  const auto method = j.value("method", std::string("mle"));
  Json out{{"method", method}};
  if (method == "linear") {
    const auto lin = tm::linear_reconstruct(rec);
    out["raw_min_eigenvalue"] = lin.min_eigenvalue;
    out["negative_eigenvalues"] = lin.negative_eigenvalues;
    out["state"] = io::to_json(tm::project_to_density_matrix(lin.rho));
  } else if (method == "mle") {
    const auto mle = tm::mle_reconstruct(rec);
    out["state"] = io::to_json(mle.rho);
    out["iterations"] = mle.iterations;
    out["gradient_norm"] = mle.gradient_norm;
    out["converged"] = mle.converged;
    if (rec.truth) out["fidelity_to_truth"] = tm::uhlmann_fidelity(mle.rho, *rec.truth);
  } else {
    throw ConfigError("tomo reconstruct: method must be linear or mle");
  }
  io::write_json_file(prepare(c.out) / "reconstruction.json", out);
}

void tomo_mc(const Common& c) {
  namespace tm = channelion::tomo;
  const Json j = load(c.config,
                      {"schema", "truth", "target", "n_scale", "iterations", "seed",
                       "posterior_weighting", "dump_fidelities"},
                      "tomo mc");
  tm::McOptions opt;
  opt.iterations = j.value("iterations", opt.iterations);
  opt.posterior_weighting = j.value("posterior_weighting", false);
  opt.workers = c.workers;
  const auto truth = io::state_from_spec(j.at("truth"));
  const auto target = io::pure_from_spec(j.value("target", Json{{"bell", "psi+"}}));
  const std::uint64_t seed = c.seed.value_or(j.value("seed", std::uint64_t{1}));
  const auto stats = tm::mc_fidelity(truth, target, j.value("n_scale", 1e3), seed, opt);
  const auto dir = prepare(c.out);
  io::write_json_file(dir / "stats.json", io::to_json(stats));
  if (j.value("dump_fidelities", true)) {
    io::CsvWriter csv(dir / "fidelities.csv", {"iteration", "fidelity", "weight"});
    for (std::size_t i = 0; i < stats.fidelities.size(); ++i)
      csv.row({i, stats.fidelities[i], stats.weights[i]});
    csv.close();
  }
  std::cout << "F = " << stats.mean << " +- " << stats.std_dev << '\n';
}

// -- perc --------------------------------------------------------------------

void perc_run(const Common& c) {
  namespace pc = channelion::percolation;
  const Json j = load(c.config, {"schema", "network", "trials", "seed"}, "perc run");
  const auto net = io::network_from_json(j.at("network"));
  const std::uint64_t seed = c.seed.value_or(j.value("seed", std::uint64_t{1}));
  const auto res = pc::percolate(net, j.value("trials", std::size_t{100}), seed, c.workers);
  const auto dir = prepare(c.out);
  io::CsvWriter csv(dir / "trials.csv", {"trial", "spanning", "largest_fraction", "clusters"});
  for (std::size_t t = 0; t < res.trials.size(); ++t)
    csv.row({t, res.trials[t].spanning ? 1 : 0, res.trials[t].largest_fraction, res.trials[t].clusters});
  csv.close();
  io::write_json_file(dir / "summary.json",
                      Json{{"lattice", pc::lattice_name(net.kind())},
                           {"trials", res.trials.size()},
                           {"seed", seed},
                           {"spanning_frequency", res.spanning_frequency},
                           {"mean_largest_fraction", res.mean_largest_fraction},
                           {"sample_nodes", res.sample_nodes},
                           {"connectivity", res.connectivity}});
}

void perc_threshold(const Common& c) {
  namespace pc = channelion::percolation;
  const Json j = load(c.config, {"schema", "lattice", "side", "grid", "trials", "bisection_steps", "seed"},
                      "perc threshold");
  pc::ThresholdOptions opt;
  opt.grid = j.value("grid", opt.grid);
  opt.trials = j.value("trials", opt.trials);
  opt.bisection_steps = j.value("bisection_steps", opt.bisection_steps);
  opt.seed = c.seed.value_or(j.value("seed", opt.seed));
  opt.workers = c.workers;
  const auto kind = pc::parse_lattice(j.value("lattice", std::string("square")));
  const auto est = pc::estimate_threshold(kind, j.value("side", std::size_t{64}), opt);
  const auto dir = prepare(c.out);
  io::CsvWriter csv(dir / "spanning.csv", {"probability", "spanning_freq", "ci_lo", "ci_hi"});
  for (const auto& p : est.points) csv.row({p.q, p.spanning_frequency, p.ci.lo, p.ci.hi});
  csv.close();
  io::write_json_file(dir / "threshold.json", Json{{"lattice", pc::lattice_name(kind)},
                                                   {"threshold", est.threshold},
                                                   {"stderr", est.standard_error},
                                                   {"warnings", est.warnings}});
  for (const auto& w : est.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "threshold " << est.threshold << " +- " << est.standard_error << '\n';
}

void perc_repeater(const Common& c) {
  const Json j = load(c.config, {"schema", "repeater"}, "perc repeater");
  const auto t = channelion::percolation::repeater_time(io::repeater_from_json(j.at("repeater")));
  std::cout << io::to_json(t).dump(2) << '\n';
}

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--config", c.config, "JSON config file")->required()->check(CLI::ExistingFile);
  if (with_out) cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channeled-ion spin entanglement simulation suite"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("channelion ") + channelion::kVersion +
                                        " (schema " + std::to_string(channelion::kSchemaVersion) + ")");

  Common common;
  std::function<void()> action;
  auto leaf = [&](CLI::App* parent, const char* name, const char* help, void (*fn)(const Common&)) {
    auto* cmd = parent->add_subcommand(name, help);
    add_common(cmd, common);
    cmd->callback([&action, fn, &common] { action = [fn, &common] { fn(common); }; });
    return cmd;
  };

  auto* pipeline = app.add_subcommand("pipeline", "end-to-end run")->require_subcommand(1);
  leaf(pipeline, "run", "run every stage and write figure CSVs", pipeline_run);

  auto* channel = app.add_subcommand("channel", "proton channeling")->require_subcommand(1);
  leaf(channel, "run", "simulate a beam", channel_run);

  auto* spins = app.add_subcommand("spins", "spin dynamics")->require_subcommand(1);
  leaf(spins, "evolve", "run a pulse sequence", spins_evolve);

  auto* entangle = app.add_subcommand("entangle", "entanglement measures")->require_subcommand(1);
  double p = 0.0, phi = 0.0;
  int sign = 1;
  auto* werner = entangle->add_subcommand("werner", "print a Werner state and its measures");
  werner->add_option("--p", p, "mixing weight")->required();
  werner->add_option("--phi", phi, "relative phase");
  werner->add_option("--sign", sign, "+1 or -1");
  werner->callback([&] { action = [&] { entangle_werner(p, phi, sign); }; });
  std::string measure = "concurrence", grid = "0:1:101", sweep_out = ".";
  auto* sweep = entangle->add_subcommand("sweep", "Werner-state sweep over p");
  sweep->add_option("--measure", measure, "concurrence or eof");
  sweep->add_option("--grid", grid, "lo:hi:n");
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->callback([&] { action = [&] { entangle_sweep(measure, grid, sweep_out); }; });

  auto* tomo = app.add_subcommand("tomo", "state tomography")->require_subcommand(1);
  leaf(tomo, "simulate", "simulate Poisson counts", tomo_simulate);
  leaf(tomo, "reconstruct", "reconstruct a state from counts", tomo_reconstruct);
  leaf(tomo, "mc", "Monte-Carlo fidelity statistics", tomo_mc);

  auto* perc = app.add_subcommand("perc", "entanglement percolation")->require_subcommand(1);
  leaf(perc, "run", "percolation trials on a network", perc_run);
  leaf(perc, "threshold", "estimate a lattice bond threshold", perc_threshold);
  leaf(perc, "repeater", "repeater time scaling", perc_repeater);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (action) action();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}
