#include "greenprop/spectral_core.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "greenprop/errors.hpp"
#include "greenprop/parallel.hpp"

namespace greenprop {

ViscosityParams::ViscosityParams(double mu, double lambda_bulk, double alpha, double gamma)
    : mu_(mu), lambda_bulk_(lambda_bulk), alpha_(alpha), gamma_(gamma) {
  if (!(mu > 0.0)) throw ConfigurationError("viscosity: mu must be positive");
  if (!(2.0 * mu + 3.0 * lambda_bulk >= 0.0))
    throw ConfigurationError("viscosity: 2*mu + 3*lambda_bulk must be non-negative");
  if (!(alpha > 0.0)) throw ConfigurationError("viscosity: alpha must be positive");
  if (!(gamma > 1.0)) throw ConfigurationError("viscosity: gamma must exceed 1");
  if (!std::isfinite(mu) || !std::isfinite(lambda_bulk) || !std::isfinite(alpha) ||
      !std::isfinite(gamma))
    throw ConfigurationError("viscosity: parameters must be finite");
}

// ---------------------------------------------------------------------------
// FFT engine

struct FftEngine::Impl {
  int n;
  int nh;  // n/2 + 1
  double* real_buf = nullptr;
  fftw_complex* half_buf = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  std::mutex mutex;
};

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftEngine::FftEngine(int n) : impl_(std::make_unique<Impl>()) {
  impl_->n = n;
  impl_->nh = n / 2 + 1;
  const std::size_t real_size = static_cast<std::size_t>(n) * n * n;
  const std::size_t half_size = static_cast<std::size_t>(n) * n * impl_->nh;
  std::lock_guard lock(planner_mutex());
  impl_->real_buf = fftw_alloc_real(real_size);
  impl_->half_buf = fftw_alloc_complex(half_size);
  impl_->r2c = fftw_plan_dft_r2c_3d(n, n, n, impl_->real_buf, impl_->half_buf, FFTW_ESTIMATE);
  impl_->c2r = fftw_plan_dft_c2r_3d(n, n, n, impl_->half_buf, impl_->real_buf, FFTW_ESTIMATE);
  if (impl_->r2c == nullptr || impl_->c2r == nullptr)
    throw NumericalError("fft: FFTW planner failed");
}

FftEngine::~FftEngine() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->r2c);
  fftw_destroy_plan(impl_->c2r);
  fftw_free(impl_->real_buf);
  fftw_free(impl_->half_buf);
}

void FftEngine::forward(std::span<const double> in, std::span<Complex> out) const {
  Impl& s = *impl_;
  const int n = s.n;
  const int nh = s.nh;
  std::lock_guard lock(s.mutex);
  std::copy(in.begin(), in.end(), s.real_buf);
  fftw_execute(s.r2c);
  const double scale = 1.0 / (static_cast<double>(n) * n * n);
  for (int i = 0; i < n; ++i) {
    const int ci = (n - i) % n;
    for (int j = 0; j < n; ++j) {
      const int cj = (n - j) % n;
      const std::size_t row = (static_cast<std::size_t>(i) * n + j) * n;
      const std::size_t half_row = (static_cast<std::size_t>(i) * n + j) * nh;
      const std::size_t conj_half_row = (static_cast<std::size_t>(ci) * n + cj) * nh;
      for (int k = 0; k < nh; ++k) {
        out[row + k] = Complex(s.half_buf[half_row + k][0], s.half_buf[half_row + k][1]) * scale;
      }
      for (int k = nh; k < n; ++k) {
        const auto& h = s.half_buf[conj_half_row + (n - k)];
        out[row + k] = Complex(h[0], -h[1]) * scale;
      }
    }
  }
}

void FftEngine::inverse(std::span<const Complex> in, std::span<double> out) const {
  Impl& s = *impl_;
  const int n = s.n;
  const int nh = s.nh;
  std::lock_guard lock(s.mutex);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::size_t row = (static_cast<std::size_t>(i) * n + j) * n;
      const std::size_t half_row = (static_cast<std::size_t>(i) * n + j) * nh;
      for (int k = 0; k < nh; ++k) {
        s.half_buf[half_row + k][0] = in[row + k].real();
        s.half_buf[half_row + k][1] = in[row + k].imag();
      }
    }
  }
  fftw_execute(s.c2r);
  std::copy(s.real_buf, s.real_buf + out.size(), out.begin());
}

// ---------------------------------------------------------------------------
// Lattice

WavenumberLattice::WavenumberLattice(int n, double box_length) : n_(n), box_length_(box_length) {
  if (n % 2 != 0) throw ConfigurationError("lattice: n must be even, got " + std::to_string(n));
  if (n < 8 || n > 512)
    throw ConfigurationError("lattice: n must lie in [8, 512], got " + std::to_string(n));
  if (!(box_length > 0.0) || !std::isfinite(box_length))
    throw ConfigurationError("lattice: box_length must be positive");
  size_ = static_cast<std::size_t>(n) * n * n;
  mask_.resize(size_);
  // |j| > n/3  <=>  3|j| > n
  std::vector<unsigned char> axis_keep(n);
  for (int i = 0; i < n; ++i) axis_keep[i] = 3 * std::abs(signed_index(i)) <= n ? 1 : 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        mask_[index(i, j, k)] = axis_keep[i] & axis_keep[j] & axis_keep[k];
  fft_ = std::make_shared<FftEngine>(n);
}

const char* fft_backend_version() { return fftw_version; }

WavenumberLattice build_lattice(int n, double box_length) { return {n, box_length}; }

double WavenumberLattice::cell_volume() const {
  const double h = spacing();
  return h * h * h;
}

double WavenumberLattice::volume() const { return box_length_ * box_length_ * box_length_; }

double WavenumberLattice::unit_wavenumber() const { return 2.0 * kPi / box_length_; }

std::array<int, 3> WavenumberLattice::coords(std::size_t mode) const {
  const int k = static_cast<int>(mode % n_);
  const int j = static_cast<int>((mode / n_) % n_);
  const int i = static_cast<int>(mode / (static_cast<std::size_t>(n_) * n_));
  return {i, j, k};
}

std::size_t WavenumberLattice::conjugate_index(std::size_t mode) const {
  const auto [i, j, k] = coords(mode);
  return index((n_ - i) % n_, (n_ - j) % n_, (n_ - k) % n_);
}

Vec3 WavenumberLattice::wave_vector(std::size_t mode) const {
  const auto [i, j, k] = coords(mode);
  return {wavenumber(i), wavenumber(j), wavenumber(k)};
}

Vec3 WavenumberLattice::symmetric_wave_vector(std::size_t mode) const {
  const auto [i, j, k] = coords(mode);
  return {odd_wavenumber(i), odd_wavenumber(j), odd_wavenumber(k)};
}

PhysicalState PhysicalState::zeros(const WavenumberLattice& lattice) {
  PhysicalState s;
  for (auto& c : s.components) c.assign(lattice.size(), 0.0);
  return s;
}

SpectralState SpectralState::zeros(const WavenumberLattice& lattice) {
  SpectralState s;
  for (auto& c : s.coeffs) c.assign(lattice.size(), Complex{});
  return s;
}

// ---------------------------------------------------------------------------
// Transforms

namespace {
template <class Field>
void require_size(const Field& f, const WavenumberLattice& lattice, const char* what) {
  if (f.size() != lattice.size())
    throw ShapeError(std::string(what) + ": field has " + std::to_string(f.size()) +
                     " entries, lattice expects " + std::to_string(lattice.size()));
}
}  // namespace

ComplexField to_spectral(const RealField& field, const WavenumberLattice& lattice) {
  require_size(field, lattice, "to_spectral");
  ComplexField out(lattice.size());
  lattice.fft().forward(field, out);
  return out;
}

RealField to_physical(const ComplexField& coeffs, const WavenumberLattice& lattice) {
  require_size(coeffs, lattice, "to_physical");
  RealField out(lattice.size());
  lattice.fft().inverse(coeffs, out);
  return out;
}

SpectralState to_spectral(const PhysicalState& state, const WavenumberLattice& lattice) {
  SpectralState spec;
  for (int c = 0; c < 4; ++c) spec.coeffs[c] = to_spectral(state.components[c], lattice);
  return spec;
}

PhysicalState to_physical(const SpectralState& spec, const WavenumberLattice& lattice) {
  PhysicalState state;
  for (int c = 0; c < 4; ++c) state.components[c] = to_physical(spec.coeffs[c], lattice);
  return state;
}

ComplexField spectral_derivative(const ComplexField& coeffs, const WavenumberLattice& lattice,
                                 int axis, int order) {
  if (order < 0 || order > 4)
    throw UnsupportedOrderError("spectral_derivative: order must lie in [0, 4], got " +
                                std::to_string(order));
  if (axis < 0 || axis > 2) throw ConfigurationError("spectral_derivative: axis must be 0, 1 or 2");
  require_size(coeffs, lattice, "spectral_derivative");
  const int n = lattice.n();
  // (i k)^order per axis index
  std::vector<Complex> multiplier(n);
  for (int i = 0; i < n; ++i) {
    const double k = order % 2 == 1 ? lattice.odd_wavenumber(i) : lattice.wavenumber(i);
    Complex m{1.0, 0.0};
    for (int p = 0; p < order; ++p) m *= Complex(0.0, k);
    multiplier[i] = m;
  }
  ComplexField out(coeffs.size());
  detail::parallel_for(coeffs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      const int idx = lattice.coords(m)[axis];
      out[m] = coeffs[m] * multiplier[idx];
    }
  });
  return out;
}

ComplexField spectral_derivative(const SpectralState& spec, const WavenumberLattice& lattice,
                                 int component, int axis, int order) {
  if (component < 0 || component > 3)
    throw ConfigurationError("spectral_derivative: component must lie in [0, 3]");
  return spectral_derivative(spec.coeffs[component], lattice, axis, order);
}

void dealias_in_place(ComplexField& coeffs, const WavenumberLattice& lattice) {
  require_size(coeffs, lattice, "dealias");
  const auto& mask = lattice.dealias_mask();
  for (std::size_t m = 0; m < coeffs.size(); ++m)
    if (mask[m] == 0) coeffs[m] = Complex{};
}

SpectralState dealias(const SpectralState& spec, const WavenumberLattice& lattice) {
  SpectralState out = spec;
  for (auto& c : out.coeffs) dealias_in_place(c, lattice);
  return out;
}

ComplexField resample(const ComplexField& coeffs, const WavenumberLattice& from,
                      const WavenumberLattice& to) {
  require_size(coeffs, from, "resample");
  if (from.box_length() != to.box_length())
    throw ConfigurationError("resample: lattices must share the box length");
  ComplexField out(to.size());
  const int half = std::min(from.n(), to.n()) / 2;
  const auto wrap = [](int j, int n) { return j < 0 ? j + n : j; };
  for (int a = 1 - half; a < half; ++a)
    for (int b = 1 - half; b < half; ++b)
      for (int c = 1 - half; c < half; ++c)
        out[to.index(wrap(a, to.n()), wrap(b, to.n()), wrap(c, to.n()))] =
            coeffs[from.index(wrap(a, from.n()), wrap(b, from.n()), wrap(c, from.n()))];
  return out;
}

double hermitian_defect(const ComplexField& coeffs, const WavenumberLattice& lattice) {
  require_size(coeffs, lattice, "hermitian_defect");
  double worst = 0.0;
  for (std::size_t m = 0; m < coeffs.size(); ++m)
    worst = std::max(worst, std::abs(coeffs[lattice.conjugate_index(m)] - std::conj(coeffs[m])));
  return worst;
}

// ---------------------------------------------------------------------------
// Norms

LpExponent LpExponent::finite(double p) {
  for (double allowed : {1.0, 4.0 / 3.0, 2.0, 4.0})
    if (p == allowed) return LpExponent(p, false);
  throw ConfigurationError("lp_norm: unsupported exponent p = " + std::to_string(p));
}

LpExponent LpExponent::parse(const std::string& text) {
  if (text == "inf" || text == "infinity") return infinity();
  if (text == "1") return finite(1.0);
  if (text == "4/3") return finite(4.0 / 3.0);
  if (text == "2") return finite(2.0);
  if (text == "4") return finite(4.0);
  throw ConfigurationError("lp_norm: unsupported exponent '" + text + "'");
}

std::string LpExponent::label() const {
  if (infinite_) return "inf";
  if (value_ == 4.0 / 3.0) return "4/3";
  if (value_ == 1.0) return "1";
  if (value_ == 2.0) return "2";
  return "4";
}

double lp_norm(std::span<const RealField> components, LpExponent p,
               const WavenumberLattice& lattice) {
  if (components.empty()) return 0.0;
  for (const auto& c : components) require_size(c, lattice, "lp_norm");
  const std::size_t size = lattice.size();
  RealField pointwise(size);
  for (std::size_t m = 0; m < size; ++m) {
    double s = 0.0;
    for (const auto& c : components) s += c[m] * c[m];
    if (!std::isfinite(s)) throw NumericalError("lp_norm: non-finite field value");
    pointwise[m] = s;  // squared magnitude
  }
  if (p.is_infinite()) {
    double worst = 0.0;
    for (double s : pointwise) worst = std::max(worst, s);
    return std::sqrt(worst);
  }
  const double exponent = p.value();
  if (exponent == 2.0) {
    return std::sqrt(detail::pairwise_sum(pointwise) * lattice.cell_volume());
  }
  for (double& s : pointwise) s = std::pow(s, 0.5 * exponent);
  return std::pow(detail::pairwise_sum(pointwise) * lattice.cell_volume(), 1.0 / exponent);
}

double lp_norm(const RealField& field, LpExponent p, const WavenumberLattice& lattice) {
  return lp_norm(std::span<const RealField>(&field, 1), p, lattice);
}

double sobolev_seminorm(const SpectralState& spec, int k, const WavenumberLattice& lattice) {
  if (k < 0 || k > 4)
    throw UnsupportedOrderError("sobolev_seminorm: order must lie in [0, 4], got " +
                                std::to_string(k));
  for (const auto& c : spec.coeffs) require_size(c, lattice, "sobolev_seminorm");
  RealField terms(lattice.size());
  for (std::size_t m = 0; m < lattice.size(); ++m) {
    const Vec3 xi = lattice.wave_vector(m);
    const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    double weight = 1.0;
    for (int p = 0; p < k; ++p) weight *= r2;
    double s = 0.0;
    for (const auto& c : spec.coeffs) s += std::norm(c[m]);
    terms[m] = weight * s;
  }
  return std::sqrt(detail::pairwise_sum(terms) * lattice.volume());
}

}  // namespace greenprop
