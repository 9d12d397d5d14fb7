#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "memesn/checkpoint.hpp"
#include "memesn/datasets.hpp"
#include "memesn/errors.hpp"
#include "memesn/experiment.hpp"
#include "memesn/forecast.hpp"
#include "memesn/hyperopt.hpp"
#include "memesn/keyvalue.hpp"
#include "memesn/metrics.hpp"

namespace fs = std::filesystem;
using namespace memesn;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kDataError = 3, kDivergence = 4 };

constexpr const char* kVersion = "memesn 0.1.0";

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string mode;
  unsigned jobs = 1;
};

/// Output directory plus a manifest of every file written there.
class OutputDir {
 public:
  OutputDir(fs::path dir, std::string command, std::string argv_line)
      : dir_(std::move(dir)), command_(std::move(command)), argv_(std::move(argv_line)) {
    fs::create_directories(dir_);
  }

  const fs::path& path() const { return dir_; }

  void write(const std::string& name, const std::string& contents) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir_ / name).string());
    out << contents;
    files_.emplace_back(name, fnv1a(contents));
  }

  void finish() {
    std::ostringstream m;
    m << "# memesn manifest v1\n";
    m << "version = " << kVersion << '\n';
    m << "command = " << command_ << '\n';
    m << "argv = " << argv_ << '\n';
    for (const auto& [name, hash] : files_) m << "file." << name << " = fnv1a:" << hex(hash) << '\n';
    std::ofstream out(dir_ / "manifest.txt", std::ios::binary);
    out << m.str();
  }

 private:
  fs::path dir_;
  std::string command_;
  std::string argv_;
  std::vector<std::pair<std::string, std::uint64_t>> files_;
};

KeyValueFile load_kv(const Common& c) {
  return c.config.empty() ? KeyValueFile{} : KeyValueFile::load(c.config);
}

ExperimentConfig resolve_config(const Common& c, const KeyValueFile& kv) {
  const ExperimentConfig base = kv.get_or("dataset.kind", "") == "narma10"
                                    ? ExperimentConfig::narma10_profile()
                                    : ExperimentConfig::mackey_glass_profile();
  ExperimentConfig cfg = ExperimentConfig::from_keyvalue(kv, base);
  if (c.seed) cfg.esn.seed = *c.seed;
  if (!c.mode.empty()) cfg.esn.mode = mode_from_string(c.mode);
  if (!c.out.empty()) {
    cfg.out_dir = c.out;
  } else if (!kv.has("output.dir")) {
    const char* env = std::getenv("MEMESN_OUT");
    cfg.out_dir = env && *env ? env : "memesn-out";
  }
  cfg.validate();
  return cfg;
}

std::string to_text(const KeyValueFile& kv) {
  std::ostringstream s;
  s << "# memesn config v1\n";
  kv.write(s);
  return s.str();
}

std::string predictions_csv(const ForecastResult& r) {
  std::ostringstream s;
  s << "# memesn predictions v1\n";
  s << "step,target,prediction,evaluated\n";
  for (std::size_t i = 0; i < r.predictions.size(); ++i) {
    s << r.first_step + i << ',' << format_double(r.targets[i]) << ',' << format_double(r.predictions[i])
      << ',' << (i >= r.eval_begin ? 1 : 0) << '\n';
  }
  return s.str();
}

template <class F>
std::string capture(F&& f) {
  std::ostringstream s;
  f(s);
  return s.str();
}

void add_common(CLI::App* app, Common& c, bool with_mode = true) {
  app->add_option("--config", c.config, "Experiment config (key = value)")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Network seed (overrides esn.seed)");
  app->add_option("--out", c.out, "Output directory (default: $MEMESN_OUT or ./memesn-out)");
  if (with_mode) {
    app->add_option("--mode", c.mode, "software or hardware")->check(CLI::IsMember({"software", "hardware"}));
  }
  app->add_option("--jobs", c.jobs, "Worker threads for sweeps")->check(CLI::Range(1u, 1024u));
}

// --- generate ---------------------------------------------------------------

int cmd_generate(const std::string& benchmark, std::size_t n, std::uint64_t seed, const std::string& out_arg,
                 const std::string& argv) {
  fs::path out = out_arg;
  if (out.empty()) {
    const char* env = std::getenv("MEMESN_OUT");
    out = env && *env ? env : "memesn-out";
  }
  OutputDir dir(out, "generate", argv);
  std::vector<std::pair<std::string, std::vector<double>>> series;
  if (benchmark == "mackey_glass") {
    MackeyGlassParams p;
    p.n = n;
    series.emplace_back("mackey_glass.csv", mackey_glass_raw(p));
  } else if (benchmark == "narma10") {
    NarmaSeries s = narma10(n, seed);
    series.emplace_back("narma10.csv", std::move(s.raw_outputs));
    series.emplace_back("narma10_inputs.csv", std::move(s.inputs));
  } else {
    throw ConfigError("unknown benchmark '" + benchmark + "' (expected mackey_glass or narma10)");
  }
  std::ostringstream sums;
  for (const auto& [name, values] : series) {
    const std::string text = capture([&](std::ostream& s) { write_series_csv(s, values); });
    dir.write(name, text);
    sums << hex(fnv1a(text)) << "  " << name << '\n';
    std::cout << name << ": " << values.size() << " rows, fnv1a " << hex(fnv1a(text)) << '\n';
  }
  dir.write("checksums.fnv1a", sums.str());
  dir.finish();
  return kOk;
}

// --- run --------------------------------------------------------------------

struct RunFlags {
  bool paired = false;
  std::size_t stop_at = 0;
  std::string checkpoint;
  std::string resume;
};

int cmd_run(const Common& c, const RunFlags& f, const std::string& argv) {
  const KeyValueFile kv = load_kv(c);
  const ExperimentConfig cfg = resolve_config(c, kv);
  OutputDir dir(cfg.out_dir, "run", argv);
  dir.write("config.txt", to_text(cfg.to_keyvalue()));
  const SeriesDataset series = load_dataset(cfg.dataset, cfg.esn.seed, cfg.esn.n_p);

  ForecastResult result;
  std::ostringstream summary;
  summary << "# memesn run summary v1\n";
  summary << "dataset = " << series.name << '\n';
  summary << "samples = " << series.size() << '\n';
  summary << "mode = " << to_string(cfg.esn.mode) << '\n';
  summary << "seed = " << cfg.esn.seed << '\n';

  if (!f.checkpoint.empty() || !f.resume.empty()) {
    if (f.paired) throw ConfigError("--paired cannot be combined with checkpointing");
    EchoStateNetwork net(cfg.esn, cfg.hardware);
    if (cfg.faults.rate > 0.0) apply_faults(net, cfg.faults);
    OnlineTrainer trainer(cfg.trainer, cfg.esn.n_o, cfg.esn.n_r);
    ForecastOptions opt;
    if (!f.resume.empty()) opt.start_step = load_checkpoint(fs::path(f.resume), net, &trainer);
    if (f.stop_at > 0) opt.stop_step = f.stop_at;
    result = forecast_run(series, net, &trainer, opt);
    if (!f.checkpoint.empty()) {
      const std::size_t next = std::min(opt.stop_step, series.size() - static_cast<std::size_t>(cfg.esn.n_p));
      save_checkpoint(fs::path(f.checkpoint), net, &trainer, next);
      summary << "checkpoint = " << f.checkpoint << '\n';
      summary << "checkpoint_step = " << next << '\n';
    }
    summary << "start_step = " << opt.start_step << '\n';
  } else {
    const RunOutcome run = run_experiment(cfg, series);
    result = run.forecast;
    if (cfg.faults.rate > 0.0) summary << "faulted_devices = " << run.faulted_devices << '\n';
    if (f.paired) {
      ExperimentConfig other = cfg;
      other.esn.mode = cfg.esn.mode == Mode::hardware ? Mode::software : Mode::hardware;
      other.faults.rate = 0.0;
      const double w_other = run_experiment(other, series).forecast.eval_wmape;
      const double w_hw = cfg.esn.mode == Mode::hardware ? result.eval_wmape : w_other;
      const double w_sw = cfg.esn.mode == Mode::hardware ? w_other : result.eval_wmape;
      summary << "software_wmape = " << format_double(w_sw) << '\n';
      summary << "hardware_wmape = " << format_double(w_hw) << '\n';
      summary << "gap = " << format_double(w_hw - w_sw) << '\n';
    }
  }
  summary << "predictions = " << result.predictions.size() << '\n';
  if (!result.predictions.empty()) summary << "eval_wmape = " << format_double(result.eval_wmape) << '\n';
  summary << "updates = " << result.updates.size() << '\n';

  dir.write("predictions.csv", predictions_csv(result));
  dir.write("trace.csv", capture([&](std::ostream& s) {
              s << "# memesn rolling wmape v1\n";
              write_trace_csv(s, result.trace);
            }));
  dir.write("training.csv", capture([&](std::ostream& s) {
              s << "# memesn training trace v1\n";
              write_training_trace_csv(s, result.updates);
            }));
  dir.write("summary.txt", summary.str());
  dir.finish();
  std::cout << summary.str();
  return kOk;
}

// --- faults -----------------------------------------------------------------

struct FaultFlags {
  std::vector<double> rates{0.0, 0.05, 0.1, 0.2, 0.3};
  std::vector<std::string> kinds{"stuck_on", "stuck_off"};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string scope;
};

int cmd_faults(const Common& c, const FaultFlags& f, const std::string& argv) {
  const KeyValueFile kv = load_kv(c);
  ExperimentConfig cfg = resolve_config(c, kv);
  cfg.esn.mode = Mode::hardware;
  if (!f.scope.empty()) cfg.faults.scope = fault_scope_from_string(f.scope);
  OutputDir dir(cfg.out_dir, "faults", argv);
  dir.write("config.txt", to_text(cfg.to_keyvalue()));

  std::vector<FaultCase> cases;
  for (const auto& k : f.kinds) {
    const Fault kind = fault_from_string(k);
    if (kind != Fault::stuck_on && kind != Fault::stuck_off) {
      throw ConfigError("--kinds accepts stuck_on and stuck_off");
    }
    for (double r : f.rates) {
      if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("--rates must lie in [0, 1]");
      cases.push_back({Structure::one_m_one_r, false, kind, r});
      cases.push_back({Structure::two_m, false, kind, r});
      cases.push_back({Structure::two_m, true, kind, r});
    }
  }
  const auto rows = fault_sweep(cfg, cases, f.seeds, c.jobs);
  const std::string table = capture([&](std::ostream& s) { write_fault_table_csv(s, rows); });
  dir.write("faults.csv", table);
  dir.finish();
  std::cout << "scope = " << to_string(cfg.faults.scope) << '\n' << table;
  return kOk;
}

// --- lifespan ---------------------------------------------------------------

int cmd_lifespan(const Common& c, double sample_period, const std::string& argv) {
  const KeyValueFile kv = load_kv(c);
  ExperimentConfig cfg = resolve_config(c, kv);
  const double period = kv.get_double("lifespan.sample_period", sample_period);
  OutputDir dir(cfg.out_dir, "lifespan", argv);
  dir.write("config.txt", to_text(cfg.to_keyvalue()));
  const SeriesDataset series = load_dataset(cfg.dataset, cfg.esn.seed, cfg.esn.n_p);

  std::vector<LifespanReport> reports;
  for (WriteScheme s : {WriteScheme::plain, WriteScheme::alternating}) {
    reports.push_back(measure_lifespan(cfg, series, s, period));
  }
  dir.write("lifespan.csv", capture([&](std::ostream& s) { write_lifespan_csv(s, reports); }));

  std::ostringstream summary;
  summary << "# memesn lifespan summary v1\n";
  const double e_d = cfg.hardware.device.endurance;
  const double sigma = cfg.hardware.device.endurance_sigma * e_d;
  const Lifespan hourly = lifespan(e_d, 0.0, 1.0 / 3600.0);
  const Lifespan fast = lifespan(e_d, 0.0, 10.0);
  summary << "reference_hourly_years = " << format_double(hourly.nominal) << '\n';
  summary << "reference_100ms_years = " << format_double(fast.nominal) << '\n';
  summary << "endurance = " << format_double(e_d) << '\n';
  summary << "endurance_sigma = " << format_double(sigma) << '\n';
  for (const auto& r : reports) {
    const std::string p = std::string(to_string(r.scheme)) + '.';
    summary << p << "max_switch_count = " << format_double(r.max_switch_count) << '\n';
    summary << p << "update_frequency_hz = " << format_double(r.update_frequency) << '\n';
    summary << p << "lifespan_years = " << format_double(r.lifespan.nominal) << '\n';
  }
  const double ratio = reports[1].max_switch_count > 0.0
                           ? reports[0].max_switch_count / reports[1].max_switch_count
                           : 0.0;
  summary << "switch_count_ratio = " << format_double(ratio) << '\n';
  dir.write("summary.txt", summary.str());
  dir.finish();
  std::cout << summary.str();
  return kOk;
}

// --- pso --------------------------------------------------------------------

int cmd_pso(const Common& c, const std::string& resume, const std::string& argv) {
  const KeyValueFile kv = load_kv(c);
  const ExperimentConfig cfg = resolve_config(c, kv);
  const SearchBounds bounds = read_search_space(kv, cfg);
  PsoConfig pso = read_pso_config(kv);
  pso.jobs = c.jobs;
  OutputDir dir(cfg.out_dir, "pso", argv);
  dir.write("config.txt", to_text(cfg.to_keyvalue()));

  const SeriesDataset series = load_dataset(cfg.dataset, cfg.esn.seed, cfg.esn.n_p);
  const Objective objective = objective_forecast(series, cfg, bounds);
  ParticleSwarm swarm(bounds, pso);
  if (!resume.empty()) swarm.load(fs::path(resume));
  const fs::path checkpoint = dir.path() / "swarm.txt";
  while (!swarm.done()) {
    swarm.step(objective);
    swarm.save(checkpoint);
    const auto& last = swarm.result().history.back();
    std::cerr << "iteration " << last.iteration << " best " << format_double(last.best_value) << '\n';
  }
  const PsoResult r = swarm.result();
  dir.write("pso_history.csv", capture([&](std::ostream& s) { write_pso_history_csv(s, bounds, r.history); }));
  const ExperimentConfig best = apply_candidate(cfg, bounds, r.best_position);
  KeyValueFile best_kv = best.to_keyvalue();
  best_kv.set("pso.best_wmape", r.best_value);
  dir.write("best_config.txt", to_text(best_kv));
  dir.finish();
  std::cout << "best_wmape = " << format_double(r.best_value) << '\n';
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    std::cout << bounds[k].name << " = " << format_double(r.best_position[k]) << '\n';
  }
  return kOk;
}

// --- print-config -----------------------------------------------------------

int cmd_print_config(const Common& c, const std::string& profile) {
  KeyValueFile kv = load_kv(c);
  if (!profile.empty() && !kv.has("dataset.kind")) kv.set("dataset.kind", profile);
  const ExperimentConfig cfg = resolve_config(c, kv);
  KeyValueFile out = cfg.to_keyvalue();
  const PsoConfig pso = read_pso_config(kv);
  out.set("pso.particles", std::to_string(pso.particles));
  out.set("pso.iterations", std::to_string(pso.iterations));
  out.set("pso.inertia", pso.inertia);
  out.set("pso.cognitive", pso.cognitive);
  out.set("pso.social", pso.social);
  out.set("pso.seed", std::to_string(pso.seed));
  for (const auto& d : read_search_space(kv, cfg)) {
    out.set("pso." + d.name, format_double(d.lo) + ", " + format_double(d.hi));
  }
  out.set("lifespan.sample_period", kv.get_or("lifespan.sample_period", "0.1"));
  std::cout << to_text(out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memristive echo state network simulator"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string argv_line;
  for (int i = 0; i < argc; ++i) argv_line += (i ? " " : "") + std::string(argv[i]);

  std::string benchmark;
  std::size_t gen_n = 4000;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Write a benchmark series and its checksum");
  gen->add_option("benchmark", benchmark, "mackey_glass or narma10")->required();
  gen->add_option("--n", gen_n, "Samples")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Generator seed (narma10)");
  gen->add_option("--out", gen_out, "Output directory (default: $MEMESN_OUT or ./memesn-out)");

  Common run_c;
  RunFlags run_f;
  auto* run = app.add_subcommand("run", "Forecast with online learning");
  add_common(run, run_c);
  run->add_flag("--paired", run_f.paired, "Also run the other mode and report the gap");
  run->add_option("--stop-at", run_f.stop_at, "Stop before this step (with --checkpoint)");
  run->add_option("--checkpoint", run_f.checkpoint, "Write a resumable checkpoint at the end");
  run->add_option("--resume", run_f.resume, "Resume from a checkpoint")->check(CLI::ExistingFile);

  Common fault_c;
  FaultFlags fault_f;
  auto* faults = app.add_subcommand("faults", "Stuck-on/stuck-off fault sweep");
  add_common(faults, fault_c, false);
  faults->add_option("--rates", fault_f.rates, "Fault rates")->delimiter(',');
  faults->add_option("--kinds", fault_f.kinds, "stuck_on, stuck_off")->delimiter(',');
  faults->add_option("--seeds", fault_f.seeds, "Network seeds")->delimiter(',');
  faults->add_option("--scope", fault_f.scope, "readout or all")->check(CLI::IsMember({"readout", "all"}));

  Common life_c;
  double sample_period = 0.1;
  auto* life = app.add_subcommand("lifespan", "Readout endurance under plain and alternating writes");
  add_common(life, life_c, false);
  life->add_option("--sample-period", sample_period, "Seconds between forecast steps")
      ->check(CLI::PositiveNumber);

  Common pso_c;
  std::string pso_resume;
  auto* pso = app.add_subcommand("pso", "Particle swarm hyperparameter search");
  add_common(pso, pso_c);
  pso->add_option("--resume", pso_resume, "Resume from a swarm checkpoint")->check(CLI::ExistingFile);

  Common print_c;
  std::string profile;
  auto* print = app.add_subcommand("print-config", "Print the resolved configuration with all defaults");
  add_common(print, print_c);
  print->add_option("--profile", profile, "mackey_glass or narma10")
      ->check(CLI::IsMember({"mackey_glass", "narma10"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return cmd_generate(benchmark, gen_n, gen_seed, gen_out, argv_line);
    if (*run) return cmd_run(run_c, run_f, argv_line);
    if (*faults) return cmd_faults(fault_c, fault_f, argv_line);
    if (*life) return cmd_lifespan(life_c, sample_period, argv_line);
    if (*pso) return cmd_pso(pso_c, pso_resume, argv_line);
    if (*print) return cmd_print_config(print_c, profile);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
