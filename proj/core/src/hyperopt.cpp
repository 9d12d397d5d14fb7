#include "memesn/hyperopt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "memesn/analog.hpp"
#include "memesn/errors.hpp"
#include "memesn/forecast.hpp"

namespace memesn {
namespace {

constexpr const char* kSwarmHeader = "# memesn-swarm v1";
constexpr double kInfeasible = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& objective, const std::vector<double>& x) {
  try {
    const double f = objective(x);
    return std::isfinite(f) ? f : kInfeasible;
  } catch (const std::exception&) {
    return kInfeasible;
  }
}

void put_values(std::ostream& out, const std::vector<double>& v) {
  for (double x : v) out << ' ' << format_double(x);
}

std::vector<double> get_values(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) {
    std::string w;
    if (!(in >> w)) throw DataError("swarm checkpoint: truncated record");
    char* end = nullptr;
    x = std::strtod(w.c_str(), &end);
    if (end != w.c_str() + w.size()) throw DataError("swarm checkpoint: bad number '" + w + "'");
  }
  return v;
}

std::string get_line(std::istream& in, const std::string& tag) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("swarm checkpoint: missing '" + tag + "' record");
  if (line.rfind(tag + ' ', 0) != 0 && line != tag) {
    throw DataError("swarm checkpoint: expected '" + tag + "', got '" + line + "'");
  }
  return line.substr(std::min(line.size(), tag.size() + 1));
}

std::size_t dim_index(const SearchBounds& bounds, const std::string& name) {
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    if (bounds[k].name == name) return k;
  }
  return bounds.size();
}

}  // namespace

void PsoConfig::validate() const {
  if (particles < 2) throw ConfigError("pso: particles must be >= 2");
  if (iterations < 1) throw ConfigError("pso: iterations must be >= 1");
  if (!(inertia >= 0.0 && cognitive >= 0.0 && social >= 0.0)) {
    throw ConfigError("pso: coefficients must be >= 0");
  }
}

ParticleSwarm::ParticleSwarm(SearchBounds bounds, PsoConfig config)
    : bounds_(std::move(bounds)), config_(config) {
  config_.validate();
  if (bounds_.empty()) throw ConfigError("pso: empty search space");
  for (const auto& d : bounds_) {
    if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || d.lo > d.hi) {
      throw ConfigError("pso: bounds of '" + d.name + "' must be finite with lo <= hi");
    }
  }
  const std::size_t n = config_.particles, dims = bounds_.size();
  x_.assign(n, std::vector<double>(dims));
  v_.assign(n, std::vector<double>(dims));
  for (std::size_t p = 0; p < n; ++p) {
    rng_.emplace_back(mix_seed(config_.seed, p));
    for (std::size_t k = 0; k < dims; ++k) {
      const double span = bounds_[k].hi - bounds_[k].lo;
      x_[p][k] = rng_[p].uniform(bounds_[k].lo, bounds_[k].hi);
      v_[p][k] = rng_[p].uniform(-span, span);
    }
  }
  pbest_x_ = x_;
  pbest_f_.assign(n, kInfeasible);
  f_.assign(n, kInfeasible);
  gbest_x_ = x_.front();
  gbest_f_ = kInfeasible;
}

bool ParticleSwarm::collapsed() const {
  return std::all_of(bounds_.begin(), bounds_.end(), [](const Dimension& d) { return d.lo == d.hi; });
}

bool ParticleSwarm::done() const {
  if (iteration_ == 0) return false;
  return collapsed() || iteration_ > config_.iterations;
}

std::vector<double> ParticleSwarm::evaluated(const std::vector<double>& x) const {
  std::vector<double> out = x;
  for (std::size_t k = 0; k < bounds_.size(); ++k) {
    if (bounds_[k].integer) out[k] = std::clamp(std::round(out[k]), std::ceil(bounds_[k].lo), std::floor(bounds_[k].hi));
  }
  return out;
}

void ParticleSwarm::evaluate_all(const Objective& objective) {
  const std::size_t n = x_.size();
  const unsigned jobs = std::max(1u, std::min<unsigned>(config_.jobs, static_cast<unsigned>(n)));
  if (jobs == 1) {
    for (std::size_t p = 0; p < n; ++p) f_[p] = safe_eval(objective, evaluated(x_[p]));
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t p = next++; p < n; p = next++) f_[p] = safe_eval(objective, evaluated(x_[p]));
      });
    }
    for (auto& t : workers) t.join();
  }
  evaluations_ += n;
  // Bookkeeping in particle order keeps the result independent of jobs.
  for (std::size_t p = 0; p < n; ++p) {
    if (f_[p] < pbest_f_[p]) {
      pbest_f_[p] = f_[p];
      pbest_x_[p] = x_[p];
    }
    if (f_[p] < gbest_f_) {
      gbest_f_ = f_[p];
      gbest_x_ = x_[p];
    }
  }
  history_.push_back({iteration_, gbest_f_, evaluated(gbest_x_)});
  ++iteration_;
}

void ParticleSwarm::step(const Objective& objective) {
  if (done()) return;
  if (iteration_ > 0) {
    for (std::size_t p = 0; p < x_.size(); ++p) {
      for (std::size_t k = 0; k < bounds_.size(); ++k) {
        const double span = bounds_[k].hi - bounds_[k].lo;
        const double r1 = rng_[p].uniform(), r2 = rng_[p].uniform();
        double v = config_.inertia * v_[p][k] + config_.cognitive * r1 * (pbest_x_[p][k] - x_[p][k]) +
                   config_.social * r2 * (gbest_x_[k] - x_[p][k]);
        v = std::clamp(v, -span, span);
        const double x = std::clamp(x_[p][k] + v, bounds_[k].lo, bounds_[k].hi);
        v_[p][k] = x - x_[p][k];
        x_[p][k] = x;
      }
    }
  }
  evaluate_all(objective);
}

PsoResult ParticleSwarm::run(const Objective& objective) {
  while (!done()) step(objective);
  return result();
}

PsoResult ParticleSwarm::result() const {
  PsoResult r;
  r.best_position = evaluated(gbest_x_);
  r.best_value = gbest_f_;
  r.history = history_;
  r.evaluations = evaluations_;
  return r;
}

void ParticleSwarm::save(std::ostream& out) const {
  out << kSwarmHeader << '\n';
  out << "settings " << config_.particles << ' ' << config_.iterations << ' ' << format_double(config_.inertia)
      << ' ' << format_double(config_.cognitive) << ' ' << format_double(config_.social) << ' '
      << config_.seed << '\n';
  out << "dimensions " << bounds_.size() << '\n';
  for (const auto& d : bounds_) {
    out << "dimension " << d.name << ' ' << format_double(d.lo) << ' ' << format_double(d.hi) << ' '
        << (d.integer ? 1 : 0) << '\n';
  }
  out << "progress " << iteration_ << ' ' << evaluations_ << ' ' << format_double(gbest_f_) << '\n';
  out << "gbest";
  put_values(out, gbest_x_);
  out << '\n';
  for (std::size_t p = 0; p < x_.size(); ++p) {
    out << "particle " << p << ' ' << format_double(pbest_f_[p]) << ' ' << format_double(f_[p]);
    put_values(out, x_[p]);
    put_values(out, v_[p]);
    put_values(out, pbest_x_[p]);
    out << '\n';
    out << "rng ";
    rng_[p].save(out);
    out << '\n';
  }
  out << "history " << history_.size() << '\n';
  for (const auto& h : history_) {
    out << "iteration " << h.iteration << ' ' << format_double(h.best_value);
    put_values(out, h.best_position);
    out << '\n';
  }
  out << "end\n";
}

void ParticleSwarm::save(const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write swarm checkpoint " + tmp);
    save(out);
  }
  std::filesystem::rename(tmp, path);
}

void ParticleSwarm::load(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header != kSwarmHeader) {
    throw DataError("swarm checkpoint: missing header '" + std::string(kSwarmHeader) + "'");
  }
  {
    std::istringstream s(get_line(in, "settings"));
    std::size_t particles = 0, iterations = 0;
    std::uint64_t seed = 0;
    s >> particles >> iterations;
    const auto coeffs = get_values(s, 3);
    s >> seed;
    if (!s || particles != config_.particles || coeffs[0] != config_.inertia ||
        coeffs[1] != config_.cognitive || coeffs[2] != config_.social || seed != config_.seed) {
      throw DataError("swarm checkpoint: PSO settings differ from the current run");
    }
    config_.iterations = iterations;
  }
  const std::size_t dims = std::stoul(get_line(in, "dimensions"));
  if (dims != bounds_.size()) throw DataError("swarm checkpoint: dimension count mismatch");
  for (const auto& d : bounds_) {
    std::istringstream s(get_line(in, "dimension"));
    std::string name;
    s >> name;
    const auto lohi = get_values(s, 3);
    if (name != d.name || lohi[0] != d.lo || lohi[1] != d.hi || (lohi[2] != 0) != d.integer) {
      throw DataError("swarm checkpoint: search space differs at '" + d.name + "'");
    }
  }
  {
    std::istringstream s(get_line(in, "progress"));
    s >> iteration_ >> evaluations_;
    gbest_f_ = get_values(s, 1)[0];
  }
  {
    std::istringstream s(get_line(in, "gbest"));
    gbest_x_ = get_values(s, dims);
  }
  for (std::size_t p = 0; p < x_.size(); ++p) {
    std::istringstream s(get_line(in, "particle"));
    std::size_t idx = 0;
    s >> idx;
    if (idx != p) throw DataError("swarm checkpoint: particle records out of order");
    const auto fs = get_values(s, 2);
    pbest_f_[p] = fs[0];
    f_[p] = fs[1];
    x_[p] = get_values(s, dims);
    v_[p] = get_values(s, dims);
    pbest_x_[p] = get_values(s, dims);
    std::istringstream r(get_line(in, "rng"));
    rng_[p].load(r);
    if (!r) throw DataError("swarm checkpoint: bad rng state");
  }
  const std::size_t n_hist = std::stoul(get_line(in, "history"));
  history_.clear();
  for (std::size_t h = 0; h < n_hist; ++h) {
    std::istringstream s(get_line(in, "iteration"));
    PsoIteration it;
    s >> it.iteration;
    it.best_value = get_values(s, 1)[0];
    it.best_position = get_values(s, dims);
    history_.push_back(std::move(it));
  }
  get_line(in, "end");
}

void ParticleSwarm::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read swarm checkpoint " + path.string());
  load(in);
}

PsoResult pso_optimize(const SearchBounds& bounds, const Objective& objective, const PsoConfig& config) {
  ParticleSwarm swarm(bounds, config);
  return swarm.run(objective);
}

void write_pso_history_csv(std::ostream& out, const SearchBounds& bounds,
                           const std::vector<PsoIteration>& history) {
  out << "# memesn pso history v1\n";
  out << "iteration,gbest_wmape";
  for (const auto& d : bounds) out << ',' << d.name;
  out << '\n';
  for (const auto& h : history) {
    out << h.iteration << ',' << format_double(h.best_value);
    for (double x : h.best_position) out << ',' << format_double(x);
    out << '\n';
  }
}

std::pair<double, double> leakage_delta_bounds(const HardwareConfig& hw) {
  if (hw.ideal_leakage) return {0.0, 1.0};
  const LeakageRange range;
  if (hw.leakage_m_y > 0.0) return leakage_feasible_interval(hw.leakage_m_z, hw.leakage_m_y, range);
  // Auto m_y: the low end uses m_y at its minimum, the high end at its maximum.
  return {leakage_feasible_interval(hw.leakage_m_z, range.r_min, range).first,
          leakage_feasible_interval(hw.leakage_m_z, range.r_max, range).second};
}

SearchBounds esn_search_space(const ExperimentConfig& base) {
  const double d_lo = leakage_delta_bounds(base.hardware).first;
  return {
      {"n_r", 20, 200, true},
      {"n_up", 1, 10, true},
      {"sparsity", 0.5, 0.98, false},
      {"leak_delta", std::max(d_lo, 0.01), 1.0, false},
      {"lambda", 0.0, 2e-2, false},
      {"alpha", 0.05, 1.0, false},
  };
}

SearchBounds read_search_space(const KeyValueFile& kv, const ExperimentConfig& base) {
  SearchBounds bounds = esn_search_space(base);
  for (auto& d : bounds) {
    const std::string key = "pso." + d.name;
    if (!kv.has(key)) continue;
    const auto v = kv.get_list(key, {});
    if (v.size() != 2) throw ConfigError("key '" + key + "' must be 'lo, hi'");
    d.lo = v[0];
    d.hi = v[1];
  }
  for (const auto& key : kv.keys("pso.")) {
    const std::string name = key.substr(4);
    const bool setting = name == "particles" || name == "iterations" || name == "inertia" ||
                         name == "cognitive" || name == "social" || name == "seed" ||
                         name == "checkpoint_every";
    if (!setting && dim_index(bounds, name) == bounds.size()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  for (const auto& d : bounds) {
    if (!(d.lo <= d.hi) || !std::isfinite(d.lo) || !std::isfinite(d.hi)) {
      throw ConfigError("pso." + d.name + ": bounds must be finite with lo <= hi");
    }
  }
  auto require = [&](const char* name, double lo, double hi) {
    const Dimension& d = bounds[dim_index(bounds, name)];
    if (d.lo < lo || d.hi > hi) {
      throw ConfigError("pso." + d.name + ": bounds must lie within [" + format_double(lo) + ", " +
                        format_double(hi) + "]");
    }
  };
  require("n_r", 1, 4096);
  require("n_up", 1, 1e6);
  require("sparsity", 0.0, 1.0);
  require("leak_delta", 0.0, 1.0);
  require("lambda", 0.0, 1.0);
  require("alpha", 1e-12, 1e3);
  return bounds;
}

PsoConfig read_pso_config(const KeyValueFile& kv, const PsoConfig& base) {
  PsoConfig c = base;
  auto count = [&](const char* key, std::size_t fallback) {
    const long long v = kv.get_int(key, static_cast<long long>(fallback));
    if (v < 0) throw ConfigError(std::string("key '") + key + "' must be >= 0");
    return static_cast<std::size_t>(v);
  };
  c.particles = count("pso.particles", c.particles);
  c.iterations = count("pso.iterations", c.iterations);
  c.inertia = kv.get_double("pso.inertia", c.inertia);
  c.cognitive = kv.get_double("pso.cognitive", c.cognitive);
  c.social = kv.get_double("pso.social", c.social);
  c.seed = count("pso.seed", c.seed);
  c.validate();
  return c;
}

ExperimentConfig apply_candidate(const ExperimentConfig& base, const SearchBounds& bounds,
                                 const std::vector<double>& position) {
  if (position.size() != bounds.size()) throw std::invalid_argument("apply_candidate: size mismatch");
  ExperimentConfig c = base;
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    const std::string& name = bounds[k].name;
    const double v = position[k];
    if (name == "n_r") {
      c.esn.n_r = static_cast<std::size_t>(std::max(1.0, std::round(v)));
    } else if (name == "n_up") {
      c.trainer.n_up = static_cast<std::size_t>(std::max(1.0, std::round(v)));
    } else if (name == "sparsity") {
      c.esn.sparsity = std::clamp(v, 0.0, 1.0);
    } else if (name == "leak_delta") {
      c.esn.leak_delta = std::clamp(v, 0.0, 1.0);
    } else if (name == "lambda") {
      c.trainer.lambda = std::max(0.0, v);
    } else if (name == "alpha") {
      c.trainer.alpha = v;
    } else {
      throw ConfigError("unknown search dimension '" + name + "'");
    }
  }
  if (c.esn.mode == Mode::hardware && c.esn.leak_delta < 1.0) {
    // Point neurons (delta = 1) bypass the leakage cell; anything else must be realizable.
    const auto [lo, hi] = leakage_delta_bounds(c.hardware);
    const double snapped = std::clamp(c.esn.leak_delta, lo, hi);
    c.esn.leak_delta = std::abs(1.0 - c.esn.leak_delta) < std::abs(snapped - c.esn.leak_delta) ? 1.0 : snapped;
  }
  return c;
}

Objective objective_forecast(SeriesDataset series, ExperimentConfig base, SearchBounds bounds) {
  return [series = std::move(series), base = std::move(base),
          bounds = std::move(bounds)](const std::vector<double>& position) {
    const ExperimentConfig c = apply_candidate(base, bounds, position);
    return run_experiment(c, series).forecast.eval_wmape;
  };
}

}  // namespace memesn
