#include "tcm/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "tcm/errors.hpp"

namespace tcm {

namespace detail {

void* aligned_alloc_bytes(std::size_t bytes) {
  void* p = fftw_malloc(bytes == 0 ? 1 : bytes);
  if (p == nullptr) throw std::bad_alloc();
  return p;
}

void aligned_free_bytes(void* p) noexcept { fftw_free(p); }

}  // namespace detail

namespace {

// FFTW's planner is not re-entrant; plan execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

void require_same_grid(const SpectralField& a, const SpectralField& b) {
  if (!a.shares_grid(b)) throw GridMismatchError();
}

}  // namespace

struct SpectralGrid::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

GridPtr SpectralGrid::make(int n, double box_length) {
  if (n < 4 || n % 2 != 0) throw ConfigError("grid size n must be an even integer >= 4");
  if (!(box_length > 0.0) || !std::isfinite(box_length)) {
    throw ConfigError("box_length must be positive and finite");
  }
  return GridPtr(new SpectralGrid(n, box_length));
}

SpectralGrid::SpectralGrid(int n, double box_length)
    : n_(n), length_(box_length), dk_(2.0 * std::numbers::pi / box_length), plans_(new Plans) {
  // largest m with 3m < n
  dealias_limit_ = (n - 1) / 3;
  const std::size_t size = spectral_size();
  kx_.resize(size);
  ky_.resize(size);
  k2_.resize(size);
  kmag_.resize(size);
  weight_.resize(size);
  mask_.resize(size);
  for (std::size_t idx = 0; idx < size; ++idx) {
    const int mx = mode_x(idx);
    const int my = mode_y(idx);
    kx_[idx] = dk_ * mx;
    ky_[idx] = dk_ * my;
    k2_[idx] = kx_[idx] * kx_[idx] + ky_[idx] * ky_[idx];
    kmag_[idx] = std::sqrt(k2_[idx]);
    weight_[idx] = (my == 0) ? 1.0 : 2.0;
    mask_[idx] = (3 * std::abs(mx) < n && 3 * my < n) ? 1 : 0;
  }

  RealBuffer real(physical_size());
  ComplexBuffer cplx(spectral_size());
  std::lock_guard lock(planner_mutex());
  plans_->r2c = fftw_plan_dft_r2c_2d(n, n, real.data(), as_fftw(cplx.data()), FFTW_ESTIMATE);
  plans_->c2r = fftw_plan_dft_c2r_2d(n, n, as_fftw(cplx.data()), real.data(), FFTW_ESTIMATE);
}

SpectralGrid::~SpectralGrid() {
  std::lock_guard lock(planner_mutex());
  if (plans_->r2c != nullptr) fftw_destroy_plan(plans_->r2c);
  if (plans_->c2r != nullptr) fftw_destroy_plan(plans_->c2r);
}

int SpectralGrid::mode_x(std::size_t idx) const {
  const int ix = static_cast<int>(idx / half());
  return ix <= n_ / 2 ? ix : ix - n_;
}

int SpectralGrid::mode_y(std::size_t idx) const { return static_cast<int>(idx % half()); }

std::size_t SpectralGrid::slot(int mx, int my) const {
  if (my < 0 || my > n_ / 2 || mx < -n_ / 2 || mx > n_ / 2) return npos;
  const int ix = mx >= 0 ? mx : mx + n_;
  return static_cast<std::size_t>(ix) * half() + my;
}

void SpectralGrid::forward(std::span<const double> physical, std::span<Complex> coeffs) const {
  // out-of-place r2c leaves its input untouched
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(physical.data()), as_fftw(coeffs.data()));
  const double norm = 1.0 / static_cast<double>(physical_size());
  const int h = half();
  for (int ix = 0; ix < n_; ++ix) {
    Complex* row = coeffs.data() + static_cast<std::size_t>(ix) * h;
    if (ix == n_ / 2) {
      std::fill(row, row + h, Complex{});
      continue;
    }
    for (int jy = 0; jy < h - 1; ++jy) row[jy] *= norm;
    row[h - 1] = Complex{};
  }
}

void SpectralGrid::backward(std::span<const Complex> coeffs, std::span<double> physical) const {
  ComplexBuffer scratch(coeffs.begin(), coeffs.end());
  fftw_execute_dft_c2r(plans_->c2r, as_fftw(scratch.data()), physical.data());
}

// ---------------------------------------------------------------------------

PhysicalField::PhysicalField(GridPtr grid) : grid_(std::move(grid)), values_(grid_->physical_size()) {}

PhysicalField::PhysicalField(GridPtr grid, const std::function<double(double, double)>& f)
    : PhysicalField(std::move(grid)) {
  const int n = grid_->n();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) (*this)(i, j) = f(grid_->x(i), grid_->y(j));
  }
}

SpectralField PhysicalField::to_spectral() const {
  SpectralField out(grid_);
  grid_->forward(values_, out.coeffs());
  return out;
}

double PhysicalField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

SpectralField::SpectralField(GridPtr grid) : grid_(std::move(grid)), coeffs_(grid_->spectral_size()) {}

SpectralField SpectralField::from_function(GridPtr grid,
                                           const std::function<double(double, double)>& f) {
  return PhysicalField(std::move(grid), f).to_spectral();
}

PhysicalField SpectralField::to_physical() const {
  PhysicalField out(grid_);
  grid_->backward(coeffs_, out.values());
  return out;
}

bool SpectralField::is_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](const Complex& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double c) {
  for (auto& z : coeffs_) z *= c;
  return *this;
}

SpectralField& SpectralField::add_scaled(double c, const SpectralField& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += c * o.coeffs_[i];
  return *this;
}

VectorField& VectorField::operator+=(const VectorField& o) {
  x += o.x;
  y += o.y;
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
  x -= o.x;
  y -= o.y;
  return *this;
}

VectorField& VectorField::operator*=(double c) {
  x *= c;
  y *= c;
  return *this;
}

VectorField& VectorField::add_scaled(double c, const VectorField& o) {
  x.add_scaled(c, o.x);
  y.add_scaled(c, o.y);
  return *this;
}

// ---------------------------------------------------------------------------

SpectralField lambda_pow(const SpectralField& f, double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw ConfigError("lambda_pow: exponent must be finite and non-negative");
  }
  if (s == 0.0) return f;
  SpectralField out(f.grid_ptr());
  const auto kmag = f.grid().kmag();
  const auto in = f.coeffs();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (kmag[i] == 0.0) continue;
    // integer powers avoid pow() rounding on the common cases
    double factor;
    if (s == 1.0) {
      factor = kmag[i];
    } else if (s == 2.0) {
      factor = f.grid().k2()[i];
    } else {
      factor = std::pow(kmag[i], s);
    }
    dst[i] = factor * in[i];
  }
  return out;
}

SpectralField derivative(const SpectralField& f, Axis axis) {
  SpectralField out(f.grid_ptr());
  const auto k = axis == Axis::x ? f.grid().kx() : f.grid().ky();
  const auto in = f.coeffs();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = Complex(-k[i] * in[i].imag(), k[i] * in[i].real());
  return out;
}

VectorField gradient(const SpectralField& f) { return {derivative(f, Axis::x), derivative(f, Axis::y)}; }

SpectralField divergence(const VectorField& w) {
  require_same_grid(w.x, w.y);
  SpectralField out(w.grid_ptr());
  const auto kx = w.grid().kx();
  const auto ky = w.grid().ky();
  const auto a = w.x.coeffs();
  const auto b = w.y.coeffs();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const Complex s = kx[i] * a[i] + ky[i] * b[i];
    dst[i] = Complex(-s.imag(), s.real());
  }
  return out;
}

SpectralField curl(const VectorField& w) {
  return derivative(w.y, Axis::x) - derivative(w.x, Axis::y);
}

SpectralField laplacian(const SpectralField& f) {
  SpectralField out(f.grid_ptr());
  const auto k2 = f.grid().k2();
  const auto in = f.coeffs();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = -k2[i] * in[i];
  return out;
}

VectorField leray_project(const VectorField& w) {
  require_same_grid(w.x, w.y);
  VectorField out = w;
  const auto kx = w.grid().kx();
  const auto ky = w.grid().ky();
  const auto k2 = w.grid().k2();
  auto a = out.x.coeffs();
  auto b = out.y.coeffs();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (k2[i] == 0.0) continue;
    const Complex kdotw = (kx[i] * a[i] + ky[i] * b[i]) / k2[i];
    a[i] -= kx[i] * kdotw;
    b[i] -= ky[i] * kdotw;
  }
  return out;
}

SpectralField dealias(const SpectralField& f) {
  SpectralField out = f;
  const auto mask = f.grid().dealias_mask();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (mask[i] == 0) dst[i] = Complex{};
  }
  return out;
}

VectorField dealias(const VectorField& w) { return {dealias(w.x), dealias(w.y)}; }

namespace {

// sum_k weight * |k|^(2s) * |c_k|^2 over the half plane, times L^2
double weighted_energy(const SpectralField& f, double s, bool include_mean) {
  const auto& grid = f.grid();
  const auto kmag = grid.kmag();
  const auto k2 = grid.k2();
  const auto w = grid.weight();
  const auto c = f.coeffs();
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double m2 = std::norm(c[i]);
    if (m2 == 0.0) continue;
    if (kmag[i] == 0.0) {
      if (include_mean) sum += w[i] * m2;
      continue;
    }
    double factor;
    if (s == 0.0) {
      factor = 1.0;
    } else if (s == 1.0) {
      factor = k2[i];
    } else if (s == 2.0) {
      factor = k2[i] * k2[i];
    } else {
      factor = std::pow(k2[i], s);
    }
    sum += w[i] * factor * m2;
  }
  return grid.area() * sum;
}

}  // namespace

double sobolev_norm(const SpectralField& f, double s, SobolevKind kind) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("sobolev_norm: s must be non-negative");
  const double lam = weighted_energy(f, s, s == 0.0);
  if (kind == SobolevKind::homogeneous) return std::sqrt(lam);
  return std::sqrt(weighted_energy(f, 0.0, true) + lam);
}

double sobolev_norm(const VectorField& w, double s, SobolevKind kind) {
  const double a = sobolev_norm(w.x, s, kind);
  const double b = sobolev_norm(w.y, s, kind);
  return std::sqrt(a * a + b * b);
}

double inner_product(const SpectralField& f, const SpectralField& g) {
  require_same_grid(f, g);
  const auto w = f.grid().weight();
  const auto a = f.coeffs();
  const auto b = g.coeffs();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += w[i] * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
  }
  return f.grid().area() * sum;
}

double inner_product(const VectorField& a, const VectorField& b) {
  return inner_product(a.x, b.x) + inner_product(a.y, b.y);
}

double l2_norm(const SpectralField& f) { return std::sqrt(std::max(0.0, inner_product(f, f))); }

double l2_norm(const VectorField& w) { return std::sqrt(std::max(0.0, inner_product(w, w))); }

double max_coeff_abs(const SpectralField& f) {
  double m = 0.0;
  for (const auto& c : f.coeffs()) m = std::max(m, std::abs(c));
  return m;
}

double linf_norm(const SpectralField& f) { return f.to_physical().max_abs(); }

double linf_norm(const VectorField& w) {
  const auto px = w.x.to_physical();
  const auto py = w.y.to_physical();
  const auto a = px.values();
  const auto b = py.values();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::hypot(a[i], b[i]));
  return m;
}

SpectralField resample(const SpectralField& f, const GridPtr& target) {
  if (target->box_length() != f.grid().box_length()) {
    throw ConfigError("resample: target grid must cover the same box");
  }
  SpectralField out(target);
  const auto& src = f.grid();
  const int limit = std::min(src.n(), target->n()) / 2 - 1;
  const auto in = f.coeffs();
  auto dst = out.coeffs();
  for (int mx = -limit; mx <= limit; ++mx) {
    for (int my = 0; my <= limit; ++my) {
      dst[target->slot(mx, my)] = in[src.slot(mx, my)];
    }
  }
  return out;
}

}  // namespace tcm
