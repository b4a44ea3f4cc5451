#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "greenprop/cli.hpp"
#include "greenprop/errors.hpp"

using namespace greenprop;

namespace {

Vec3 parse_vec3(const std::string& text) {
  Vec3 v{};
  std::istringstream in(text);
  std::string item;
  int i = 0;
  while (std::getline(in, item, ',')) {
    if (i == 3) throw ConfigurationError("--xi takes three comma-separated numbers");
    v[i++] = parse_real(item);
  }
  if (i != 3) throw ConfigurationError("--xi takes three comma-separated numbers");
  return v;
}

// CLI11 keeps optional<path> awkward; collect into strings and convert.
std::optional<std::filesystem::path> as_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Green's-function propagator for the linearized compressible Navier-Stokes system"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GREENPROP_VERSION);

  LatticeInfoArgs li;
  std::string li_box = "2pi", li_t;
  auto* c_li = app.add_subcommand("lattice-info", "Lattice sizes, memory and kernel preconditions");
  c_li->add_option("--n", li.n, "grid points per axis");
  c_li->add_option("--L", li_box, "box length (\"32pi\" accepted)");
  c_li->add_option("--nu", li.nu, "2 mu + lambda");
  c_li->add_option("--t", li_t, "time at which to check kernel preconditions");

  SymbolCheckArgs sc;
  std::string sc_out;
  auto* c_sc = app.add_subcommand("symbol-check", "Symbol against the matrix-exponential oracle");
  c_sc->add_option("--samples", sc.samples);
  c_sc->add_option("--near-confluent", sc.near_confluent);
  c_sc->add_option("--seed", sc.seed);
  c_sc->add_option("--output", sc_out, "directory for manifest and csv");

  Lemma22Args lm;
  std::string lm_box = "80", lm_out;
  auto* c_lm = app.add_subcommand("lemma22", "Decay fit of one kernel-part norm series");
  c_lm->add_option("--part", lm.part, "L, HR or HS");
  c_lm->add_option("--p", lm.p, "1, 4/3, 2 or inf");
  c_lm->add_option("--k", lm.k);
  c_lm->add_option("--tmin", lm.tmin);
  c_lm->add_option("--tmax", lm.tmax);
  c_lm->add_option("--count", lm.count);
  c_lm->add_option("--mu", lm.mu);
  c_lm->add_option("--lambda", lm.lambda_bulk);
  c_lm->add_option("--cutoff", lm.cutoff, "frequency cutoff for HR");
  c_lm->add_option("--n", lm.n, "box grid for p = 1, 4/3 and HS");
  c_lm->add_option("--L", lm_box);
  c_lm->add_option("--fields", lm.fields, "random fields for HS");
  c_lm->add_option("--seed", lm.seed);
  c_lm->add_option("--output", lm_out);

  SimulateArgs sim;
  std::string sim_out;
  auto* c_sim = app.add_subcommand("simulate", "Run the nonlinear (or linear) integrator");
  c_sim->add_option("--config", sim.config)->required();
  c_sim->add_option("--output", sim_out, "overrides [output] directory");

  DecayReportArgs dr;
  std::string dr_out;
  auto* c_dr = app.add_subcommand("decay-report", "Decay fits of a simulate output directory");
  c_dr->add_option("--input", dr.input)->required();
  c_dr->add_option("--output", dr_out);

  OracleCompareArgs oc;
  std::string oc_xi = "1,0,0", oc_box = "32pi", oc_out;
  auto* c_oc = app.add_subcommand("oracle-compare", "Spot checks against independent oracles");
  c_oc->add_option("--what", oc.what, "symbol or linear-gaussian");
  c_oc->add_option("--t", oc.t);
  c_oc->add_option("--xi", oc_xi, "x,y,z");
  c_oc->add_option("--mu", oc.mu);
  c_oc->add_option("--lambda", oc.lambda_bulk);
  c_oc->add_option("--n", oc.n);
  c_oc->add_option("--L", oc_box);
  c_oc->add_option("--sigma", oc.sigma);
  c_oc->add_option("--t-end", oc.t_end);
  c_oc->add_option("--output", oc_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_li->parsed()) {
      li.box_length = parse_real(li_box);
      if (!li_t.empty()) li.t = parse_real(li_t);
      return cmd_lattice_info(li, std::cout);
    }
    if (c_sc->parsed()) {
      sc.output = as_path(sc_out);
      return cmd_symbol_check(sc, std::cout);
    }
    if (c_lm->parsed()) {
      lm.box_length = parse_real(lm_box);
      lm.output = as_path(lm_out);
      return cmd_lemma22(lm, std::cout);
    }
    if (c_sim->parsed()) {
      sim.output = as_path(sim_out);
      return cmd_simulate(sim, std::cout);
    }
    if (c_dr->parsed()) {
      dr.output = as_path(dr_out);
      return cmd_decay_report(dr, std::cout);
    }
    if (c_oc->parsed()) {
      oc.xi = parse_vec3(oc_xi);
      oc.box_length = parse_real(oc_box);
      oc.output = as_path(oc_out);
      return cmd_oracle_compare(oc, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "greenprop: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
