#include "memesn/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "memesn/errors.hpp"
#include "memesn/keyvalue.hpp"

namespace memesn {
namespace {

constexpr const char* kHeader = "# memesn-checkpoint v1";

void put_vector(std::ostream& out, const char* name, const Eigen::VectorXd& v) {
  out << "vector " << name << ' ' << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v[i]);
  out << '\n';
}

void put_matrix(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ' ' << format_double(m(i, j));
  }
  out << '\n';
}

void put_device(std::ostream& out, const DeviceSite& d) {
  const auto& s = d.state;
  out << ' ' << format_double(s.w) << ' ' << format_double(s.switch_count) << ' '
      << format_double(s.endurance_limit) << ' ' << to_string(s.fault) << ' '
      << format_double(s.frozen_g) << ' ' << d.events;
}

void put_crossbar(std::ostream& out, const char* name, const Crossbar& xb) {
  const bool two_m = xb.config().structure == Structure::two_m;
  out << "crossbar " << name << ' ' << xb.rows() << ' ' << xb.cols() << ' '
      << to_string(xb.config().structure) << '\n';
  out << "noise ";
  xb.noise_source().save(out);
  out << '\n';
  for (std::size_t i = 0; i < xb.rows(); ++i) {
    for (std::size_t j = 0; j < xb.cols(); ++j) {
      const Cell& c = xb.cell(i, j);
      out << "cell " << i << ' ' << j << ' ' << c.pruned << ' ' << c.next_minus;
      put_device(out, c.plus);
      if (two_m) put_device(out, c.minus);
      out << '\n';
    }
  }
}

void put_holds(std::ostream& out, const char* name, const std::vector<SampleHold>& holds) {
  out << "holds " << name << ' ' << holds.size();
  for (const auto& h : holds) out << ' ' << format_double(h.stored);
  out << '\n';
}

/// Whitespace-token reader over one record line.
class Record {
 public:
  Record(std::string line, std::size_t line_no) : in_(std::move(line)), line_no_(line_no) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) fail("unexpected end of record");
    return w;
  }
  void expect(const std::string& w) {
    const std::string got = word();
    if (got != w) fail("expected '" + w + "', got '" + got + "'");
  }
  double number() {
    const std::string w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end != w.c_str() + w.size()) fail("bad number '" + w + "'");
    return v;
  }
  std::size_t count() {
    const double v = number();
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) fail("bad count");
    return static_cast<std::size_t>(v);
  }
  std::istream& stream() { return in_; }
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("checkpoint line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istringstream in_;
  std::size_t line_no_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  Record next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty() || line[0] == '#') continue;
      return Record(line, line_no_);
    }
    throw DataError("checkpoint: unexpected end of file");
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 1;
};

Eigen::VectorXd get_vector(Reader& r, const std::string& name, Eigen::Index n) {
  Record rec = r.next();
  rec.expect("vector");
  rec.expect(name);
  if (static_cast<Eigen::Index>(rec.count()) != n) rec.fail("vector " + name + " has the wrong length");
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rec.number();
  return v;
}

Eigen::MatrixXd get_matrix(Reader& r, const std::string& name) {
  Record rec = r.next();
  rec.expect("matrix");
  rec.expect(name);
  const auto rows = static_cast<Eigen::Index>(rec.count());
  const auto cols = static_cast<Eigen::Index>(rec.count());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rec.number();
  }
  return m;
}

void get_device(Record& rec, DeviceSite& d) {
  d.state.w = rec.number();
  d.state.switch_count = rec.number();
  d.state.endurance_limit = rec.number();
  try {
    d.state.fault = fault_from_string(rec.word());
  } catch (const std::exception& e) {
    rec.fail(e.what());
  }
  d.state.frozen_g = rec.number();
  d.events = static_cast<std::uint64_t>(rec.count());
}

void get_crossbar(Reader& r, const std::string& name, Crossbar& xb) {
  Record head = r.next();
  head.expect("crossbar");
  head.expect(name);
  if (head.count() != xb.rows() || head.count() != xb.cols()) head.fail("crossbar " + name + " size mismatch");
  if (head.word() != to_string(xb.config().structure)) head.fail("crossbar " + name + " structure mismatch");
  const bool two_m = xb.config().structure == Structure::two_m;

  Record noise = r.next();
  noise.expect("noise");
  Rng rng;
  rng.load(noise.stream());
  if (!noise.stream()) noise.fail("bad noise state");
  xb.set_noise_source(rng);

  for (std::size_t n = 0; n < xb.rows() * xb.cols(); ++n) {
    Record rec = r.next();
    rec.expect("cell");
    const std::size_t i = rec.count(), j = rec.count();
    if (i >= xb.rows() || j >= xb.cols()) rec.fail("cell index out of range");
    Cell c = xb.cell(i, j);
    c.pruned = rec.count() != 0;
    c.next_minus = rec.count() != 0;
    get_device(rec, c.plus);
    if (two_m) get_device(rec, c.minus);
    xb.set_cell(i, j, c);
  }
}

void get_holds(Reader& r, const std::string& name, std::vector<SampleHold>& holds) {
  Record rec = r.next();
  rec.expect("holds");
  rec.expect(name);
  if (rec.count() != holds.size()) rec.fail("holds " + name + " size mismatch");
  for (auto& h : holds) h.stored = rec.number();
}

}  // namespace

void save_checkpoint(std::ostream& out, const EchoStateNetwork& net, const OnlineTrainer* trainer,
                     std::size_t next_step) {
  const EsnConfig& cfg = net.config();
  out << kHeader << '\n';
  out << "next_step " << next_step << '\n';
  out << "network " << to_string(cfg.mode) << ' ' << cfg.n_u << ' ' << cfg.n_r << ' ' << cfg.n_o << ' '
      << cfg.seed << '\n';
  put_vector(out, "x", net.state().x);
  put_vector(out, "x_hat", net.state().x_hat);
  put_matrix(out, "w_or", net.weights().w_or);
  if (trainer) {
    const TrainerState& s = trainer->state();
    out << "trainer " << s.count << ' ' << format_double(s.theta) << ' ' << s.shadow_count << '\n';
    put_matrix(out, "grad", s.grad);
    put_matrix(out, "shadow", s.shadow);
    put_vector(out, "washout_samples",
               Eigen::Map<const Eigen::VectorXd>(s.washout_samples.data(),
                                                 static_cast<Eigen::Index>(s.washout_samples.size())));
  } else {
    out << "trainer none\n";
  }
  if (const HardwareFabric* hw = net.hardware()) {
    put_crossbar(out, "input", hw->input_layer());
    put_crossbar(out, "reservoir", hw->reservoir_layer());
    put_crossbar(out, "readout", hw->readout_layer());
    put_holds(out, "input", hw->input_holds());
    put_holds(out, "feedback", hw->feedback_holds());
  }
  out << "end\n";
}

void save_checkpoint(const std::filesystem::path& path, const EchoStateNetwork& net,
                     const OnlineTrainer* trainer, std::size_t next_step) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  save_checkpoint(out, net, trainer, next_step);
}

std::size_t load_checkpoint(std::istream& in, EchoStateNetwork& net, OnlineTrainer* trainer) {
  std::string header;
  if (!std::getline(in, header) || header != kHeader) {
    throw DataError("checkpoint: missing header '" + std::string(kHeader) + "'");
  }
  Reader r(in);
  Record step = r.next();
  step.expect("next_step");
  const std::size_t next_step = step.count();

  const EsnConfig& cfg = net.config();
  Record netrec = r.next();
  netrec.expect("network");
  if (netrec.word() != to_string(cfg.mode)) netrec.fail("mode mismatch");
  if (netrec.count() != cfg.n_u || netrec.count() != cfg.n_r || netrec.count() != cfg.n_o) {
    netrec.fail("layer size mismatch");
  }
  if (netrec.word() != std::to_string(cfg.seed)) netrec.fail("seed mismatch");

  ReservoirState state;
  state.x = get_vector(r, "x", static_cast<Eigen::Index>(cfg.n_r));
  state.x_hat = get_vector(r, "x_hat", static_cast<Eigen::Index>(cfg.n_r));
  const Eigen::MatrixXd w_or = get_matrix(r, "w_or");
  if (w_or.rows() != static_cast<Eigen::Index>(cfg.n_o) || w_or.cols() != static_cast<Eigen::Index>(cfg.n_r)) {
    throw DataError("checkpoint: w_or size mismatch");
  }

  Record trec = r.next();
  trec.expect("trainer");
  const std::string first = trec.word();
  if (first != "none") {
    TrainerState s;
    s.count = static_cast<std::size_t>(std::strtoull(first.c_str(), nullptr, 10));
    s.theta = trec.number();
    s.shadow_count = trec.count();
    s.grad = get_matrix(r, "grad");
    s.shadow = get_matrix(r, "shadow");
    Record wrec = r.next();
    wrec.expect("vector");
    wrec.expect("washout_samples");
    s.washout_samples.resize(wrec.count());
    for (double& v : s.washout_samples) v = wrec.number();
    if (trainer) {
      if (s.grad.rows() != trainer->state().grad.rows() || s.grad.cols() != trainer->state().grad.cols()) {
        throw DataError("checkpoint: trainer size mismatch");
      }
      trainer->set_state(std::move(s));
    }
  }

  if (HardwareFabric* hw = net.hardware()) {
    get_crossbar(r, "input", hw->input_layer());
    get_crossbar(r, "reservoir", hw->reservoir_layer());
    get_crossbar(r, "readout", hw->readout_layer());
    net.sync_weights();
    net.set_state(state);
    get_holds(r, "input", hw->input_holds());
    get_holds(r, "feedback", hw->feedback_holds());
  } else {
    net.mutable_readout() = w_or;
    net.set_state(state);
  }
  Record end = r.next();
  end.expect("end");
  return next_step;
}

std::size_t load_checkpoint(const std::filesystem::path& path, EchoStateNetwork& net,
                            OnlineTrainer* trainer) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  return load_checkpoint(in, net, trainer);
}

}  // namespace memesn
