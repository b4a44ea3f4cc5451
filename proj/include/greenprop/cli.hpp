#pragma once

// Experiment harness: config files, initial data, manifests and the
// subcommands behind the greenprop tool. Subcommands return process exit
// codes: 0 pass, 1 check failed, 2 usage or configuration error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "greenprop/integrator.hpp"
#include "greenprop/kernel_analysis.hpp"

namespace greenprop {

enum class InitKind { GaussianBump, HfPacket, RandomBand };

const char* to_string(InitKind kind);
InitKind parse_init_kind(const std::string& text);

struct InitSpec {
  InitKind kind = InitKind::GaussianBump;
  /// gaussian_bump: eps; hf_packet: multiplier of K^-2; random_band: L2 norm.
  double amplitude = 1e-2;
  /// gaussian_bump: sigma; hf_packet: K.
  double width_or_wavenumber = 1.0;
  int band = 4;
  std::optional<std::uint64_t> seed;
  /// Subtract the grid mean from every component (gaussian_bump).
  bool zero_mean = false;
};

struct ExperimentConfig {
  double mu = 1.0;
  double lambda_bulk = 0.0;
  double alpha = 1.0;
  double gamma = 1.4;
  /// Smallness budget for |alpha - 1|; only reported.
  double delta = 0.3;

  int n = 32;
  double box_length = 2.0 * kPi;

  SchemeConfig time;
  bool linear_only = false;

  InitSpec init;

  double eta = 0.1;
  double vacuum_floor = 1e-6;
  bool enforce_apriori = true;

  std::string directory = "out";
  std::vector<std::string> formats{"csv"};

  ViscosityParams params() const { return {mu, lambda_bulk, alpha, gamma}; }
  RunOptions run_options() const;
  /// Throws ConfigurationError on any violated invariant.
  void validate() const;
};

/// Sectioned key = value text ([params], [grid], [time], [init], [monitors],
/// [output]). Unknown sections or keys are errors. Numbers may carry a "pi"
/// factor ("32pi", "0.5*pi").
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// "32pi" -> 32 pi; plain numbers otherwise.
double parse_real(const std::string& text);

/// Initial perturbation on the lattice; always dealiased and checked
/// against the vacuum guard (ConfigurationError when violated).
PhysicalState generate_initial(const InitSpec& spec, const WavenumberLattice& lattice,
                               double vacuum_floor = 1e-6);

/// Lattice multiple of 2 pi / L nearest to K (the wavenumber hf_packet uses).
double snapped_wavenumber(double k, const WavenumberLattice& lattice);

/// JSON-lines manifest: one object per line, keys sorted, no timestamps.
class Manifest {
 public:
  Manifest(std::string command, std::string echo_json);
  void add(const std::string& json_line);
  void write(const std::filesystem::path& directory) const;
  static std::vector<std::string> read(const std::filesystem::path& directory);

  static constexpr const char* kFileName = "manifest.jsonl";

 private:
  std::vector<std::string> lines_;
};

std::string config_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& json_line);

/// t, sobolev_k0..2, then L<p>_k0, L<p>_k1 for p in 4/3, 2, 4, inf.
void write_norms_csv(std::ostream& out, const std::vector<NormBundle>& samples);
std::vector<NormBundle> read_norms_csv(std::istream& in);
/// t,ok,bound,margin,mass,n4_sup
void write_monitor_csv(std::ostream& out, const RunRecord& record);
/// t,energy,dissipation,I1..I6,residual (residual empty at the ends)
void write_energy_csv(std::ostream& out, const RunRecord& record);

/// Decay report options for a run: torus-capped window starting at 5;
/// nonlinear runs use tolerance 0.25 and one-sided L2 rows.
ReportOptions report_options_for(const ExperimentConfig& config);

// Subcommands. Human-readable output goes to `out`, problems to `err`.

struct LatticeInfoArgs {
  int n = 32;
  double box_length = 2.0 * kPi;
  double nu = 2.0;
  std::optional<double> t;
};
int cmd_lattice_info(const LatticeInfoArgs& args, std::ostream& out);

struct SymbolCheckArgs {
  int samples = 1000;
  int near_confluent = 50;
  std::uint64_t seed = 7;
  std::optional<std::filesystem::path> output;
};
int cmd_symbol_check(const SymbolCheckArgs& args, std::ostream& out);

struct Lemma22Args {
  std::string part = "L";
  std::string p = "2";
  int k = 0;
  double tmin = 5.0;
  double tmax = 500.0;
  int count = 100;
  double mu = 1.0;
  double lambda_bulk = 0.0;
  /// Frequency cutoff for HighRegular.
  double cutoff = 50.0;
  /// Box pipeline (p = 1, 4/3) and the HS operator check.
  int n = 128;
  double box_length = 80.0;
  int fields = 20;
  std::uint64_t seed = 11;
  std::optional<std::filesystem::path> output;
};
/// Builds the norm series for one (part, p, k) and fits it: algebraic for L,
/// exponential with positive rate for HR, exponential at rate 1/nu (20%) for HS.
int cmd_lemma22(const Lemma22Args& args, std::ostream& out);
DecayFit lemma22_fit(const Lemma22Args& args, std::vector<KernelRow>* rows = nullptr);

struct SimulateArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> output;
};
/// Exit 0 iff the run completed.
int cmd_simulate(const SimulateArgs& args, std::ostream& out);

struct DecayReportArgs {
  std::filesystem::path input;
  std::optional<std::filesystem::path> output;
};
/// Exit 0 iff every row passes; refuses directories without a manifest.
int cmd_decay_report(const DecayReportArgs& args, std::ostream& out);

struct OracleCompareArgs {
  /// "symbol": symbol vs matrix exponential at (t, xi);
  /// "linear-gaussian": linear box run vs radial prediction.
  std::string what = "symbol";
  double t = 1.0;
  Vec3 xi{1.0, 0.0, 0.0};
  double mu = 1.0;
  double lambda_bulk = 0.0;
  int n = 32;
  double box_length = 32.0 * kPi;
  double sigma = 6.0;
  double t_end = 20.0;
  std::optional<std::filesystem::path> output;
};
int cmd_oracle_compare(const OracleCompareArgs& args, std::ostream& out);

}  // namespace greenprop
