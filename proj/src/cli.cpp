#include "greenprop/cli.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/version.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include "json.hpp"
#include <random>
#include <set>
#include <sstream>

#include "greenprop/csv.hpp"
#include "greenprop/errors.hpp"
#include "greenprop/symbol_check.hpp"

#ifndef GREENPROP_VERSION
#define GREENPROP_VERSION "unknown"
#endif

namespace greenprop {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(InitKind kind) {
  switch (kind) {
    case InitKind::GaussianBump: return "gaussian_bump";
    case InitKind::HfPacket: return "hf_packet";
    case InitKind::RandomBand: return "random_band";
  }
  return "?";
}

InitKind parse_init_kind(const std::string& text) {
  if (text == "gaussian_bump") return InitKind::GaussianBump;
  if (text == "hf_packet") return InitKind::HfPacket;
  if (text == "random_band") return InitKind::RandomBand;
  throw ConfigurationError("unknown init kind '" + text + "'");
}

double parse_real(const std::string& raw) {
  std::string text;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) text += c;
  double factor = 1.0;
  if (text.size() >= 2 && text.compare(text.size() - 2, 2, "pi") == 0) {
    factor = kPi;
    text.resize(text.size() - 2);
    if (!text.empty() && text.back() == '*') text.pop_back();
    if (text.empty()) return kPi;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigurationError("not a number: '" + raw + "'");
  }
  if (used != text.size()) throw ConfigurationError("not a number: '" + raw + "'");
  return v * factor;
}

namespace {

long parse_integer(const std::string& text) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    throw ConfigurationError("not an integer: '" + text + "'");
  }
  if (used != text.size()) throw ConfigurationError("not an integer: '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ConfigurationError("not a boolean: '" + text + "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

RunOptions ExperimentConfig::run_options() const {
  RunOptions o;
  o.eta = eta;
  o.vacuum_floor = vacuum_floor;
  o.linear_only = linear_only;
  o.enforce_apriori = enforce_apriori;
  return o;
}

void ExperimentConfig::validate() const {
  (void)params();
  (void)WavenumberLattice(n, box_length);
  time.validate();
  if (!(init.amplitude > 0.0)) throw ConfigurationError("init amplitude must be positive");
  if (!(init.width_or_wavenumber > 0.0)) throw ConfigurationError("init width_or_wavenumber must be positive");
  if (init.kind == InitKind::RandomBand) {
    if (!init.seed) throw ConfigurationError("random_band initial data needs a seed");
    if (init.band < 1 || 3 * init.band > n)
      throw ConfigurationError("random_band band must lie in [1, n/3]");
  }
  if (!(eta > 0.0)) throw ConfigurationError("monitors eta must be positive");
  if (!(vacuum_floor > 0.0 && vacuum_floor < 1.0))
    throw ConfigurationError("monitors vacuum_floor must lie in (0, 1)");
  if (!(delta >= 0.0)) throw ConfigurationError("params delta must be non-negative");
  for (const auto& f : formats)
    if (f != "csv" && f != "state") throw ConfigurationError("unknown output format '" + f + "'");
}

ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  using Setter = void (*)(ExperimentConfig&, const std::string&);
  static const std::map<std::string, std::map<std::string, Setter>> keys = {
      {"params",
       {{"mu", [](ExperimentConfig& c, const std::string& v) { c.mu = parse_real(v); }},
        {"lambda_bulk", [](ExperimentConfig& c, const std::string& v) { c.lambda_bulk = parse_real(v); }},
        {"alpha", [](ExperimentConfig& c, const std::string& v) { c.alpha = parse_real(v); }},
        {"gamma", [](ExperimentConfig& c, const std::string& v) { c.gamma = parse_real(v); }},
        {"delta", [](ExperimentConfig& c, const std::string& v) { c.delta = parse_real(v); }}}},
      {"grid",
       {{"n", [](ExperimentConfig& c, const std::string& v) { c.n = static_cast<int>(parse_integer(v)); }},
        {"box_length", [](ExperimentConfig& c, const std::string& v) { c.box_length = parse_real(v); }}}},
      {"time",
       {{"scheme", [](ExperimentConfig& c, const std::string& v) { c.time.scheme = parse_scheme(v); }},
        {"dt", [](ExperimentConfig& c, const std::string& v) { c.time.dt = parse_real(v); }},
        {"t_end", [](ExperimentConfig& c, const std::string& v) { c.time.t_end = parse_real(v); }},
        {"cadence",
         [](ExperimentConfig& c, const std::string& v) {
           c.time.diagnostics_cadence = static_cast<int>(parse_integer(v));
         }},
        {"linear_only", [](ExperimentConfig& c, const std::string& v) { c.linear_only = parse_bool(v); }}}},
      {"init",
       {{"kind", [](ExperimentConfig& c, const std::string& v) { c.init.kind = parse_init_kind(v); }},
        {"amplitude", [](ExperimentConfig& c, const std::string& v) { c.init.amplitude = parse_real(v); }},
        {"width_or_wavenumber",
         [](ExperimentConfig& c, const std::string& v) { c.init.width_or_wavenumber = parse_real(v); }},
        {"band", [](ExperimentConfig& c, const std::string& v) { c.init.band = static_cast<int>(parse_integer(v)); }},
        {"seed",
         [](ExperimentConfig& c, const std::string& v) {
           const long s = parse_integer(v);
           if (s < 0) throw ConfigurationError("init seed must be non-negative");
           c.init.seed = static_cast<std::uint64_t>(s);
         }},
        {"zero_mean", [](ExperimentConfig& c, const std::string& v) { c.init.zero_mean = parse_bool(v); }}}},
      {"monitors",
       {{"eta", [](ExperimentConfig& c, const std::string& v) { c.eta = parse_real(v); }},
        {"vacuum_floor", [](ExperimentConfig& c, const std::string& v) { c.vacuum_floor = parse_real(v); }},
        {"enforce_apriori",
         [](ExperimentConfig& c, const std::string& v) { c.enforce_apriori = parse_bool(v); }}}},
      {"output",
       {{"directory", [](ExperimentConfig& c, const std::string& v) { c.directory = v; }},
        {"formats", [](ExperimentConfig& c, const std::string& v) { c.formats = split(v, ','); }}}},
  };
  for (const auto& [section, body] : tree) {
    const auto s = keys.find(section);
    if (s == keys.end()) {
      if (body.empty()) throw ConfigurationError("config: key '" + section + "' outside a section");
      throw ConfigurationError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      const auto k = s->second.find(key);
      if (k == s->second.end()) throw ConfigurationError("config: unknown key '" + key + "' in [" + section + "]");
      k->second(c, value.data());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config '" + path.string() + "'");
  return parse_config(in);
}

namespace {

// exp(-x^2 / sigma^2) summed over periodic images, centred at L / 2.
std::vector<double> periodized_gaussian_1d(const WavenumberLattice& lattice, double sigma) {
  const double L = lattice.box_length();
  const int images = static_cast<int>(std::ceil(6.0 * sigma / L)) + 1;
  std::vector<double> g(lattice.n(), 0.0);
  for (int i = 0; i < lattice.n(); ++i) {
    const double x = i * lattice.spacing() - 0.5 * L;
    for (int m = -images; m <= images; ++m) {
      const double y = (x + m * L) / sigma;
      g[i] += std::exp(-y * y);
    }
  }
  return g;
}

RealField periodized_gaussian(const WavenumberLattice& lattice, double eps, double sigma) {
  const auto g = periodized_gaussian_1d(lattice, sigma);
  RealField f(lattice.size());
  for (std::size_t m = 0; m < lattice.size(); ++m) {
    const auto c = lattice.coords(m);
    f[m] = eps * g[c[0]] * g[c[1]] * g[c[2]];
  }
  return f;
}

PhysicalState gaussian_bump_state(const WavenumberLattice& lattice, double eps, double sigma) {
  PhysicalState s = PhysicalState::zeros(lattice);
  s.rho() = periodized_gaussian(lattice, eps, sigma);
  const double d = 1.0 / std::sqrt(3.0);
  for (int a = 0; a < 3; ++a) {
    s.u(a) = s.rho();
    for (double& v : s.u(a)) v *= d;
  }
  return s;
}

ComplexField random_band_coefficients(const WavenumberLattice& lattice, int band, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexField c(lattice.size());
  for (std::size_t m = 1; m < lattice.size(); ++m) {
    bool inside = true;
    for (int a : lattice.coords(m)) inside = inside && std::abs(lattice.signed_index(a)) <= band;
    if (inside) {
      const double re = normal(rng);
      const double im = normal(rng);
      c[m] = Complex(re, im);
    }
  }
  for (std::size_t m = 0; m < lattice.size(); ++m) {
    const std::size_t cm = lattice.conjugate_index(m);
    if (cm == m)
      c[m] = Complex(c[m].real(), 0.0);
    else if (cm > m)
      c[cm] = std::conj(c[m]);
  }
  c[0] = 0.0;
  return c;
}

}  // namespace

double snapped_wavenumber(double k, const WavenumberLattice& lattice) {
  const double k0 = lattice.unit_wavenumber();
  return std::max(1.0, std::round(k / k0)) * k0;
}

PhysicalState generate_initial(const InitSpec& spec, const WavenumberLattice& lattice, double vacuum_floor) {
  if (!(spec.amplitude > 0.0)) throw ConfigurationError("generate_initial: amplitude must be positive");
  PhysicalState s = PhysicalState::zeros(lattice);
  switch (spec.kind) {
    case InitKind::GaussianBump: {
      s = gaussian_bump_state(lattice, spec.amplitude, spec.width_or_wavenumber);
      if (spec.zero_mean)
        for (auto& comp : s.components) {
          double mean = 0.0;
          for (double v : comp) mean += v;
          mean /= static_cast<double>(comp.size());
          for (double& v : comp) v -= mean;
        }
      break;
    }
    case InitKind::HfPacket: {
      const double limit = lattice.n() / 3.0 * lattice.unit_wavenumber();
      const double k = snapped_wavenumber(spec.width_or_wavenumber, lattice);
      if (spec.width_or_wavenumber > limit || k > limit)
        throw ConfigurationError("hf_packet: K = " + format_number(spec.width_or_wavenumber) +
                                 " exceeds the resolvable n/3 * 2 pi / L = " + format_number(limit));
      const RealField env = periodized_gaussian(lattice, 1.0, lattice.box_length() / 8.0);
      const double scale = spec.amplitude / (k * k);
      const double centre = 0.5 * lattice.box_length();
      for (std::size_t m = 0; m < lattice.size(); ++m) {
        const double x = lattice.coords(m)[0] * lattice.spacing() - centre;
        s.rho()[m] = scale * std::sin(k * x) * env[m];
      }
      break;
    }
    case InitKind::RandomBand: {
      if (!spec.seed) throw ConfigurationError("random_band: a seed is required");
      if (spec.band < 1 || 3 * spec.band > lattice.n())
        throw ConfigurationError("random_band: band must lie in [1, n/3]");
      std::mt19937_64 rng(*spec.seed);
      SpectralState c;
      for (auto& comp : c.coeffs) comp = random_band_coefficients(lattice, spec.band, rng);
      const double norm = sobolev_seminorm(c, 0, lattice);
      for (auto& comp : c.coeffs)
        for (auto& v : comp) v *= spec.amplitude / norm;
      s = to_physical(c, lattice);
      break;
    }
  }
  s = to_physical(dealias(to_spectral(s, lattice), lattice), lattice);
  for (double v : s.rho())
    if (!(1.0 + v > vacuum_floor))
      throw ConfigurationError(std::string(to_string(spec.kind)) + ": initial density violates the vacuum floor");
  return s;
}

Manifest::Manifest(std::string command, std::string echo_json) {
  json head = {{"record", "manifest"},
               {"command", command},
               {"version", GREENPROP_VERSION},
               {"fft", fft_backend_version()},
               {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                             std::to_string(EIGEN_MINOR_VERSION)},
               {"boost", BOOST_LIB_VERSION}};
  lines_.push_back(head.dump());
  json echo = {{"record", "config"}, {"config", json::parse(echo_json)}};
  lines_.push_back(echo.dump());
}

void Manifest::add(const std::string& json_line) { lines_.push_back(json::parse(json_line).dump()); }

void Manifest::write(const fs::path& directory) const {
  fs::create_directories(directory);
  std::ofstream out(directory / kFileName, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write manifest in '" + directory.string() + "'");
  for (const auto& l : lines_) out << l << '\n';
}

std::vector<std::string> Manifest::read(const fs::path& directory) {
  std::ifstream in(directory / kFileName);
  if (!in) throw ConfigurationError("no " + std::string(kFileName) + " in '" + directory.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  if (lines.empty()) throw ConfigurationError("empty manifest in '" + directory.string() + "'");
  return lines;
}

std::string config_json(const ExperimentConfig& c) {
  json j = {
      {"params", {{"mu", c.mu}, {"lambda_bulk", c.lambda_bulk}, {"alpha", c.alpha}, {"gamma", c.gamma},
                  {"delta", c.delta}, {"alpha_within_delta", std::abs(c.alpha - 1.0) <= c.delta}}},
      {"grid", {{"n", c.n}, {"box_length", c.box_length}}},
      {"time", {{"scheme", to_string(c.time.scheme)}, {"dt", c.time.dt}, {"t_end", c.time.t_end},
                {"cadence", c.time.diagnostics_cadence}, {"linear_only", c.linear_only}}},
      {"init", {{"kind", to_string(c.init.kind)}, {"amplitude", c.init.amplitude},
                {"width_or_wavenumber", c.init.width_or_wavenumber}, {"band", c.init.band},
                {"zero_mean", c.init.zero_mean}}},
      {"monitors", {{"eta", c.eta}, {"vacuum_floor", c.vacuum_floor}, {"enforce_apriori", c.enforce_apriori}}},
      {"output", {{"directory", c.directory}, {"formats", c.formats}}}};
  j["init"]["seed"] = c.init.seed ? json(*c.init.seed) : json(nullptr);
  return j.dump();
}

ExperimentConfig config_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    ExperimentConfig c;
    const auto& p = j.at("params");
    c.mu = p.at("mu");
    c.lambda_bulk = p.at("lambda_bulk");
    c.alpha = p.at("alpha");
    c.gamma = p.at("gamma");
    c.delta = p.at("delta");
    c.n = j.at("grid").at("n");
    c.box_length = j.at("grid").at("box_length");
    const auto& t = j.at("time");
    c.time.scheme = parse_scheme(t.at("scheme"));
    c.time.dt = t.at("dt");
    c.time.t_end = t.at("t_end");
    c.time.diagnostics_cadence = t.at("cadence");
    c.linear_only = t.at("linear_only");
    const auto& i = j.at("init");
    c.init.kind = parse_init_kind(i.at("kind"));
    c.init.amplitude = i.at("amplitude");
    c.init.width_or_wavenumber = i.at("width_or_wavenumber");
    c.init.band = i.at("band");
    c.init.zero_mean = i.at("zero_mean");
    if (!i.at("seed").is_null()) c.init.seed = i.at("seed").get<std::uint64_t>();
    const auto& m = j.at("monitors");
    c.eta = m.at("eta");
    c.vacuum_floor = m.at("vacuum_floor");
    c.enforce_apriori = m.at("enforce_apriori");
    c.directory = j.at("output").at("directory");
    c.formats = j.at("output").at("formats").get<std::vector<std::string>>();
    return c;
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("manifest config record: ") + e.what());
  }
}

void write_norms_csv(std::ostream& out, const std::vector<NormBundle>& samples) {
  out << "t,sobolev_k0,sobolev_k1,sobolev_k2";
  for (const char* p : kBundleExponents) out << ",L" << p << "_k0,L" << p << "_k1";
  out << '\n';
  for (const auto& b : samples) {
    out << format_number(b.t);
    for (double v : b.sobolev) out << ',' << format_number(v);
    for (const auto& row : b.lp) out << ',' << format_number(row[0]) << ',' << format_number(row[1]);
    out << '\n';
  }
}

std::vector<NormBundle> read_norms_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,sobolev_k0", 0) != 0)
    throw ConfigurationError("norms csv: unexpected header");
  std::vector<NormBundle> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 12) throw ConfigurationError("norms csv: expected 12 columns in '" + line + "'");
    NormBundle b;
    b.t = parse_real(cells[0]);
    for (int k = 0; k < 3; ++k) b.sobolev[k] = parse_real(cells[1 + k]);
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 2; ++k) b.lp[i][k] = parse_real(cells[4 + 2 * i + k]);
    out.push_back(b);
  }
  return out;
}

void write_monitor_csv(std::ostream& out, const RunRecord& r) {
  out << "t,ok,bound,margin,mass,n4_sup\n";
  for (std::size_t i = 0; i < r.monitors.size(); ++i) {
    const auto& m = r.monitors[i];
    out << format_number(m.t) << ',' << (m.ok ? "true" : "false") << ',' << m.bound << ','
        << format_number(m.margin) << ',' << format_number(r.mass[i]) << ',' << format_number(r.n4_sup[i]) << '\n';
  }
}

void write_energy_csv(std::ostream& out, const RunRecord& r) {
  out << "t,energy,dissipation,I1,I2,I3,I4,I5,I6,residual\n";
  const auto residuals = energy_residuals(r);
  for (std::size_t i = 0; i < r.energy.size(); ++i) {
    const auto& e = r.energy[i];
    out << format_number(e.t) << ',' << format_number(e.energy) << ',' << format_number(e.dissipation);
    for (double v : e.terms) out << ',' << format_number(v);
    out << ',';
    if (i >= 1 && i - 1 < residuals.size() && i + 1 < r.energy.size()) out << format_number(residuals[i - 1].second);
    out << '\n';
  }
}

ReportOptions report_options_for(const ExperimentConfig& config) {
  ReportOptions o;
  o.window = {5.0, torus_window_cap(config.box_length, config.params().nu())};
  if (config.linear_only) {
    o.tolerance = 0.1;
    o.one_sided = false;
  } else {
    o.tolerance = 0.25;
    o.one_sided = true;
  }
  o.l43_tolerance = 0.1;
  return o;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write '" + path.string() + "'");
  out << text;
}

json fit_json(const DecayFit& f) {
  return {{"model", to_string(f.model)},   {"fitted", f.fitted_rate},   {"theory", f.theory_rate},
          {"tolerance", f.tolerance},      {"one_sided", f.one_sided}, {"r2", f.r_squared},
          {"window", {f.window[0], f.window[1]}}, {"samples", f.samples}, {"pass", f.pass}};
}

}  // namespace

int cmd_lattice_info(const LatticeInfoArgs& a, std::ostream& out) {
  const WavenumberLattice lat(a.n, a.box_length);
  std::size_t kept = 0;
  for (std::size_t m = 0; m < lat.size(); ++m) kept += lat.keeps(m) ? 1 : 0;
  json j = {{"n", lat.n()},
            {"box_length", lat.box_length()},
            {"spacing", lat.spacing()},
            {"unit_wavenumber", lat.unit_wavenumber()},
            {"nyquist_wavenumber", lat.n() / 2 * lat.unit_wavenumber()},
            {"dealias_wavenumber", lat.n() / 3 * lat.unit_wavenumber()},
            {"modes", lat.size()},
            {"kept_modes", kept},
            {"state_megabytes", 4.0 * 8.0 * static_cast<double>(lat.size()) / 1e6},
            {"torus_window_cap", torus_window_cap(lat.box_length(), a.nu)}};
  int code = 0;
  if (a.t) {
    const double need = 20.0 * std::sqrt(a.nu * *a.t);
    const bool box_ok = lat.box_length() >= need;
    const bool res_ok = lat.n() * kPi / lat.box_length() >= 4.0;
    j["kernel_box_length_ok"] = box_ok;
    j["kernel_resolution_ok"] = res_ok;
    j["required_box_length"] = need;
    code = box_ok && res_ok ? 0 : 1;
  }
  out << j.dump(2) << '\n';
  return code;
}

int cmd_symbol_check(const SymbolCheckArgs& a, std::ostream& out) {
  if (a.samples < 1 || a.near_confluent < 0) throw ConfigurationError("symbol-check: bad sample counts");
  json echo = {{"samples", a.samples}, {"near_confluent", a.near_confluent}, {"seed", a.seed}};
  Manifest manifest("symbol-check", echo.dump());
  if (a.output) manifest.write(*a.output);
  const auto report = run_symbol_check(symbol_sampling_plan(a.samples, a.near_confluent, a.seed));
  struct Row {
    const char* metric;
    double value;
    double tolerance;
  };
  const std::vector<Row> rows = {{"max_oracle_error", report.max_oracle_error, 1e-8},
                                 {"max_near_confluent_error", report.max_near_confluent_error, 1e-8},
                                 {"max_operator_norm_excess", report.max_operator_norm - 1.0, 1e-10},
                                 {"max_semigroup_error", report.max_semigroup_error, 1e-10},
                                 {"max_reality_error", report.max_reality_error, 1e-12},
                                 {"max_part_sum_error", report.max_part_sum_error, 1e-12},
                                 {"max_vieta_residual", report.max_vieta_residual, 1e-12}};
  std::ostringstream csv;
  csv << "metric,value,tolerance,pass\n";
  for (const auto& r : rows)
    csv << r.metric << ',' << format_number(r.value) << ',' << format_number(r.tolerance) << ','
        << (r.value <= r.tolerance ? "true" : "false") << '\n';
  out << csv.str();
  const bool pass = report.max_oracle_error <= 1e-8 && report.max_near_confluent_error <= 1e-8;
  if (a.output) {
    write_text(*a.output / "symbol_check.csv", csv.str());
    manifest.add(json{{"record", "output"}, {"file", "symbol_check.csv"}}.dump());
    manifest.add(json{{"record", "result"}, {"pass", pass}}.dump());
    manifest.write(*a.output);
  }
  return pass ? 0 : 1;
}

DecayFit lemma22_fit(const Lemma22Args& a, std::vector<KernelRow>* rows) {
  const SymbolPart part = parse_symbol_part(a.part);
  const ViscosityParams params(a.mu, a.lambda_bulk, 1.0, 1.4);
  const LpExponent p = LpExponent::parse(a.p);
  if (a.count < 8) throw ConfigurationError("lemma22: need at least 8 times");
  if (!(a.tmin > 0.0) || !(a.tmax > a.tmin)) throw ConfigurationError("lemma22: need 0 < tmin < tmax");
  std::vector<double> times(a.count);
  for (int i = 0; i < a.count; ++i) times[i] = a.tmin + (a.tmax - a.tmin) * i / (a.count - 1);
  const std::array<double, 2> window{a.tmin, a.tmax};
  const std::string label = std::string(to_string(part)) + " p=" + a.p + " k=" + std::to_string(a.k);
  NormSeries series;
  series.label = label;
  series.times = times;
  const auto record = [&](double t, double v, const char* pipeline, double quality) {
    series.values.push_back(v);
    if (rows) rows->push_back({label, t, v, pipeline, quality});
  };

  if (part == SymbolPart::Low) {
    const double inv_p = p.is_infinite() ? 0.0 : 1.0 / p.value();
    const double theory = 1.5 * (1.0 - inv_p) + 0.5 * a.k;
    if (p.is_infinite() || p.value() == 2.0) {
      const RadialMode mode = p.is_infinite() ? RadialMode::L1Symbol : RadialMode::L2Kernel;
      for (double t : times) record(t, symbol_norm_radial(t, part, a.k, mode, params), "radial", 1.0);
      return fit_decay(series, DecayModel::Algebraic, window, theory, 0.1);
    }
    const WavenumberLattice lat(a.n, a.box_length);
    const int index = p.value() == 1.0 ? 0 : 1;
    if (index == 1 && std::abs(p.value() - 4.0 / 3.0) > 1e-12)
      throw ConfigurationError("lemma22: the box pipeline supports p = 1 and 4/3");
    bool gated = true;
    for (double t : times) {
      const BoxKernel box = kernel_on_box(t, part, lat, params, a.k);
      gated = gated && box.truncation_quality >= 0.999;
      record(t, box.norms[index], "box", box.truncation_quality);
    }
    DecayFit fit = fit_decay(series, DecayModel::Algebraic, window, theory, index == 0 ? 0.15 : 0.1);
    fit.pass = fit.pass && gated;
    return fit;
  }
  if (part == SymbolPart::HighRegular) {
    if (p.is_infinite()) {
      for (double t : times) record(t, symbol_sup_norm(t, part, a.k, params, a.cutoff), "sup", 1.0);
    } else if (p.value() == 2.0) {
      for (double t : times)
        record(t, symbol_norm_radial(t, part, a.k, RadialMode::L2Kernel, params, {1e-8, a.cutoff}), "radial", 1.0);
    } else {
      throw ConfigurationError("lemma22: HR supports p = 2 and inf");
    }
    DecayFit fit = fit_decay(series, DecayModel::Exponential, window, 0.0, 0.0, true);
    fit.pass = fit.pass && fit.fitted_rate > 0.0;
    return fit;
  }
  if (part == SymbolPart::HighSingular) {
    const WavenumberLattice lat(a.n, a.box_length);
    if (a.fields < 1) throw ConfigurationError("lemma22: need at least one field");
    InitSpec spec;
    spec.kind = InitKind::RandomBand;
    spec.band = lat.n() / 3;
    spec.amplitude = 1e-3;
    DecayFit worst;
    bool first = true, bounded = true;
    series.values.assign(times.size(), 0.0);
    for (int f = 0; f < a.fields; ++f) {
      spec.seed = a.seed + static_cast<std::uint64_t>(f);
      const SpectralState field = to_spectral(generate_initial(spec, lat), lat);
      NormSeries one;
      one.label = label;
      one.times = times;
      one.values = singular_operator_ratios(field, times, params, lat);
      for (std::size_t i = 0; i < times.size(); ++i) {
        bounded = bounded && one.values[i] <= singular_lattice_sup(times[i], params, lat) * (1.0 + 1e-12);
        series.values[i] = std::max(series.values[i], one.values[i]);
      }
      const DecayFit fit = fit_decay(one, DecayModel::Exponential, window, 1.0 / params.nu(), 0.2 / params.nu());
      if (first || !fit.pass || std::abs(fit.fitted_rate - fit.theory_rate) > std::abs(worst.fitted_rate - worst.theory_rate)) {
        if (first || worst.pass || !fit.pass) worst = fit;
      }
      first = false;
    }
    if (rows)
      for (std::size_t i = 0; i < times.size(); ++i) rows->push_back({label, times[i], series.values[i], "operator", 1.0});
    worst.pass = worst.pass && bounded;
    return worst;
  }
  throw ConfigurationError("lemma22: part must be L, HR or HS");
}

int cmd_lemma22(const Lemma22Args& a, std::ostream& out) {
  json echo = {{"part", a.part}, {"p", a.p},        {"k", a.k},         {"tmin", a.tmin},
               {"tmax", a.tmax}, {"count", a.count}, {"mu", a.mu},       {"lambda_bulk", a.lambda_bulk},
               {"cutoff", a.cutoff}, {"n", a.n},    {"box_length", a.box_length}, {"fields", a.fields},
               {"seed", a.seed}};
  Manifest manifest("lemma22", echo.dump());
  if (a.output) manifest.write(*a.output);
  std::vector<KernelRow> rows;
  const DecayFit fit = lemma22_fit(a, &rows);
  std::ostringstream line;
  line << "part,p,k,model,window_lo,window_hi,fitted,theory,tolerance,r2,pass\n"
       << a.part << ',' << a.p << ',' << a.k << ',' << to_string(fit.model) << ',' << format_number(fit.window[0])
       << ',' << format_number(fit.window[1]) << ',' << format_number(fit.fitted_rate) << ','
       << format_number(fit.theory_rate) << ',' << format_number(fit.tolerance) << ','
       << format_number(fit.r_squared) << ',' << (fit.pass ? "true" : "false") << '\n';
  out << line.str();
  if (a.output) {
    std::ostringstream csv;
    write_kernel_csv(csv, rows);
    write_text(*a.output / "kernel_norms.csv", csv.str());
    write_text(*a.output / "fit.csv", line.str());
    manifest.add(json{{"record", "output"}, {"file", "kernel_norms.csv"}}.dump());
    manifest.add(json{{"record", "output"}, {"file", "fit.csv"}}.dump());
    manifest.add(json{{"record", "result"}, {"fit", fit_json(fit)}}.dump());
    manifest.write(*a.output);
  }
  return fit.pass ? 0 : 1;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  ExperimentConfig config = load_config(a.config);
  if (a.output) config.directory = a.output->string();
  const fs::path dir = config.directory;
  const WavenumberLattice lat(config.n, config.box_length);
  const PhysicalState init = generate_initial(config.init, lat, config.vacuum_floor);

  Manifest manifest("simulate", config_json(config));
  json inputs = {{"record", "input"}, {"config_file", a.config.filename().string()}};
  if (config.init.kind == InitKind::HfPacket)
    inputs["effective_wavenumber"] = snapped_wavenumber(config.init.width_or_wavenumber, lat);
  manifest.add(inputs.dump());
  manifest.write(dir);

  RunOptions options = config.run_options();
  options.keep_final_state = std::find(config.formats.begin(), config.formats.end(), "state") != config.formats.end();
  const RunRecord rec = run_simulation(init, config.time, config.params(), lat, options);

  std::ostringstream norms, monitors, energy;
  write_norms_csv(norms, rec.samples);
  write_monitor_csv(monitors, rec);
  write_energy_csv(energy, rec);
  write_text(dir / "norms.csv", norms.str());
  write_text(dir / "monitors.csv", monitors.str());
  write_text(dir / "energy.csv", energy.str());
  for (const char* f : {"norms.csv", "monitors.csv", "energy.csv"})
    manifest.add(json{{"record", "output"}, {"file", f}}.dump());
  if (rec.final_state) {
    const PhysicalState fin = to_physical(*rec.final_state, lat);
    std::ostringstream s;
    s << "index,rho,u1,u2,u3\n";
    for (std::size_t m = 0; m < lat.size(); ++m)
      s << m << ',' << format_number(fin.rho()[m]) << ',' << format_number(fin.u(0)[m]) << ','
        << format_number(fin.u(1)[m]) << ',' << format_number(fin.u(2)[m]) << '\n';
    write_text(dir / "final_state.csv", s.str());
    manifest.add(json{{"record", "output"}, {"file", "final_state.csv"}}.dump());
  }

  double mass_drift = 0.0;
  for (double m : rec.mass) mass_drift = std::max(mass_drift, std::abs(m - rec.mass.front()));
  double max_residual = 0.0;
  for (const auto& [t, r] : energy_residuals(rec)) max_residual = std::max(max_residual, std::abs(r));
  double max_n4 = 0.0;
  for (double v : rec.n4_sup) max_n4 = std::max(max_n4, v);
  const bool monitors_ok =
      std::all_of(rec.monitors.begin(), rec.monitors.end(), [](const AprioriStatus& s) { return s.ok; });
  json result = {{"record", "result"},       {"reason", to_string(rec.reason)},  {"message", rec.message},
                 {"steps_taken", rec.steps_taken}, {"final_time", rec.final_time}, {"mass_drift", mass_drift},
                 {"max_energy_residual", max_residual}, {"max_n4", max_n4},   {"monitors_ok", monitors_ok}};
  manifest.add(result.dump());
  manifest.write(dir);
  out << "termination: " << to_string(rec.reason) << (rec.message.empty() ? "" : " (" + rec.message + ")") << '\n'
      << "final time: " << format_number(rec.final_time) << " after " << rec.steps_taken << " steps\n"
      << "mass drift: " << format_number(mass_drift) << '\n'
      << "monitors ok: " << (monitors_ok ? "true" : "false") << '\n'
      << "max |energy residual|: " << format_number(max_residual) << '\n'
      << "output: " << dir.string() << '\n';
  return rec.reason == Termination::Completed ? 0 : 1;
}

int cmd_decay_report(const DecayReportArgs& a, std::ostream& out) {
  const auto lines = Manifest::read(a.input);
  std::optional<ExperimentConfig> config;
  for (const auto& l : lines) {
    const json j = json::parse(l);
    if (j.value("record", "") == "config" && j.at("config").contains("grid"))
      config = config_from_json(j.at("config").dump());
  }
  if (!config) throw ConfigurationError("manifest in '" + a.input.string() + "' has no run configuration");
  std::ifstream in(a.input / "norms.csv");
  if (!in) throw ConfigurationError("no norms.csv in '" + a.input.string() + "'");
  const auto samples = read_norms_csv(in);
  if (samples.empty()) throw ConfigurationError("norms.csv holds no samples");
  ReportOptions options = report_options_for(*config);
  options.window[1] = std::min(options.window[1], samples.back().t);
  const DecayReport report = build_decay_report(samples, options);
  std::ostringstream csv;
  write_decay_csv(csv, report);
  out << csv.str();

  const fs::path dir = a.output.value_or(a.input);
  write_text(dir / "decay_report.csv", csv.str());
  json record = {{"record", "decay_report"}, {"file", "decay_report.csv"}, {"all_pass", report.all_pass()}};
  if (dir == a.input) {
    // append to the run's own manifest so the directory keeps exactly one
    std::ostringstream text;
    for (const auto& l : lines)
      if (json::parse(l).value("record", "") != "decay_report") text << l << '\n';
    text << record.dump() << '\n';
    write_text(dir / Manifest::kFileName, text.str());
  } else {
    Manifest manifest("decay-report", json{{"input", a.input.string()}}.dump());
    manifest.add(record.dump());
    manifest.write(dir);
  }
  return report.all_pass() ? 0 : 1;
}

int cmd_oracle_compare(const OracleCompareArgs& a, std::ostream& out) {
  const ViscosityParams params(a.mu, a.lambda_bulk, 1.0, 1.4);
  json echo = {{"what", a.what}, {"t", a.t}, {"xi", {a.xi[0], a.xi[1], a.xi[2]}}, {"mu", a.mu},
               {"lambda_bulk", a.lambda_bulk}, {"n", a.n}, {"box_length", a.box_length},
               {"sigma", a.sigma}, {"t_end", a.t_end}};
  Manifest manifest("oracle-compare", echo.dump());
  if (a.output) manifest.write(*a.output);
  std::ostringstream csv;
  bool pass = false;
  if (a.what == "symbol") {
    const Matrix4c g = symbol(a.t, a.xi, params).entries;
    const Matrix4c e = expm_oracle(a.t, a.xi, params);
    const double err = (g - e).cwiseAbs().maxCoeff();
    pass = err <= 1e-8;
    csv << "quantity,value,tolerance,pass\nmax_entry_error," << format_number(err) << ",1e-08,"
        << (pass ? "true" : "false") << '\n';
  } else if (a.what == "linear-gaussian") {
    const WavenumberLattice lat(a.n, a.box_length);
    const double eps = 1e-2;
    const double d = 1.0 / std::sqrt(3.0);
    const PhysicalState init = gaussian_bump_state(lat, eps, a.sigma);
    SchemeConfig sc;
    sc.dt = 0.5;
    sc.t_end = a.t_end;
    sc.diagnostics_cadence = 4;
    RunOptions opt;
    opt.linear_only = true;
    opt.enforce_apriori = false;
    opt.keep_final_state = false;
    const RunRecord rec = run_simulation(init, sc, params, lat, opt);
    const GaussianData data{eps, a.sigma, {d, d, d}};
    double worst = 0.0;
    csv << "t,box,radial,relative\n";
    for (const auto& b : rec.samples) {
      const double expect = gaussian_linear_norm(b.t, 0, RadialMode::L2Kernel, params, data);
      const double rel = std::abs(b.sobolev[0] - expect) / expect;
      worst = std::max(worst, rel);
      csv << format_number(b.t) << ',' << format_number(b.sobolev[0]) << ',' << format_number(expect) << ','
          << format_number(rel) << '\n';
    }
    pass = rec.reason == Termination::Completed && worst <= 0.02;
    csv << "# max relative deviation " << format_number(worst) << (pass ? " pass" : " FAIL") << '\n';
  } else {
    throw ConfigurationError("oracle-compare: --what must be symbol or linear-gaussian");
  }
  out << csv.str();
  if (a.output) {
    write_text(*a.output / "oracle_compare.csv", csv.str());
    manifest.add(json{{"record", "output"}, {"file", "oracle_compare.csv"}}.dump());
    manifest.add(json{{"record", "result"}, {"pass", pass}}.dump());
    manifest.write(*a.output);
  }
  return pass ? 0 : 1;
}

}  // namespace greenprop
