#pragma once

// Fourier-space toolkit on the periodic box [0, L)^2.
//
// Layout: physical samples are stored row-major as f[i * n + j] with
// x = i * L / n and y = j * L / n. Spectral coefficients use the real-to-complex
// half plane: index (ix, jy) -> ix * (n/2 + 1) + jy, where ix covers every
// x-wavenumber (wrapped) and jy = 0..n/2 the non-negative y-wavenumbers.
//
// Coefficients are Fourier-series amplitudes: f(x) = sum_k c_k exp(i k.x),
// so the physical L2 pairing over the box is L^2 * sum_k Re(c_k conj(d_k)).
// Nyquist rows/columns are kept at zero so every stored field is real and
// its wavenumber lattice is symmetric about the origin.

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <vector>

namespace tcm {

using Complex = std::complex<double>;

namespace detail {
void* aligned_alloc_bytes(std::size_t bytes);
void aligned_free_bytes(void* p) noexcept;
}  // namespace detail

// SIMD-aligned allocator; every buffer handed to the FFT backend uses it so a
// single plan per grid can execute on any pair of buffers.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(detail::aligned_alloc_bytes(n * sizeof(T)));
  }
  void deallocate(T* p, std::size_t) noexcept { detail::aligned_free_bytes(p); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using RealBuffer = std::vector<double, AlignedAllocator<double>>;
using ComplexBuffer = std::vector<Complex, AlignedAllocator<Complex>>;

enum class Axis { x, y };

enum class SobolevKind { homogeneous, nonhomogeneous };

class SpectralGrid;
using GridPtr = std::shared_ptr<const SpectralGrid>;

class SpectralGrid {
 public:
  // n must be even and >= 4; box_length > 0.
  static GridPtr make(int n, double box_length);

  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;
  ~SpectralGrid();

  int n() const { return n_; }
  int half() const { return n_ / 2 + 1; }
  double box_length() const { return length_; }
  double dk() const { return dk_; }
  // Largest per-axis wavenumber magnitude on the lattice, (n/2) * 2pi/L.
  double k_max() const { return 0.5 * n_ * dk_; }
  double spacing() const { return length_ / n_; }
  double cell_area() const { return spacing() * spacing(); }
  double area() const { return length_ * length_; }

  std::size_t physical_size() const { return static_cast<std::size_t>(n_) * n_; }
  std::size_t spectral_size() const { return static_cast<std::size_t>(n_) * half(); }

  // Integer lattice indices of a spectral slot.
  int mode_x(std::size_t idx) const;
  int mode_y(std::size_t idx) const;
  // Slot of the integer mode (mx, my) with my >= 0, or npos if not stored.
  std::size_t slot(int mx, int my) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::span<const double> kx() const { return kx_; }
  std::span<const double> ky() const { return ky_; }
  std::span<const double> k2() const { return k2_; }
  std::span<const double> kmag() const { return kmag_; }
  // Half-plane multiplicity: 1 on the jy = 0 column, 2 elsewhere.
  std::span<const double> weight() const { return weight_; }
  // Two-thirds rule: true iff |mx| < n/3 and |my| < n/3.
  std::span<const unsigned char> dealias_mask() const { return mask_; }
  // Largest retained lattice index after dealiasing.
  int dealias_limit() const { return dealias_limit_; }

  // Normalized transforms. forward() zeroes Nyquist modes.
  void forward(std::span<const double> physical, std::span<Complex> coeffs) const;
  void backward(std::span<const Complex> coeffs, std::span<double> physical) const;

  double x(int i) const { return i * spacing(); }
  double y(int j) const { return j * spacing(); }

  bool same_as(const SpectralGrid& other) const {
    return this == &other || (n_ == other.n_ && length_ == other.length_);
  }

 private:
  SpectralGrid(int n, double box_length);

  struct Plans;
  int n_;
  double length_;
  double dk_;
  int dealias_limit_;
  std::vector<double> kx_, ky_, k2_, kmag_, weight_;
  std::vector<unsigned char> mask_;
  std::unique_ptr<Plans> plans_;
};

class SpectralField;

class PhysicalField {
 public:
  explicit PhysicalField(GridPtr grid);
  PhysicalField(GridPtr grid, const std::function<double(double, double)>& f);

  const SpectralGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator()(int i, int j) { return values_[static_cast<std::size_t>(i) * grid_->n() + j]; }
  double operator()(int i, int j) const {
    return values_[static_cast<std::size_t>(i) * grid_->n() + j];
  }

  SpectralField to_spectral() const;
  double max_abs() const;

 private:
  GridPtr grid_;
  RealBuffer values_;
};

class SpectralField {
 public:
  explicit SpectralField(GridPtr grid);
  static SpectralField from_function(GridPtr grid, const std::function<double(double, double)>& f);

  const SpectralGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<Complex> coeffs() { return coeffs_; }
  std::span<const Complex> coeffs() const { return coeffs_; }

  PhysicalField to_physical() const;
  bool is_finite() const;
  bool shares_grid(const SpectralField& other) const { return grid_->same_as(*other.grid_); }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double c);
  // this += c * o
  SpectralField& add_scaled(double c, const SpectralField& o);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double c, SpectralField a) { return a *= c; }
  friend SpectralField operator*(SpectralField a, double c) { return a *= c; }
  SpectralField operator-() const { return -1.0 * (*this); }

 private:
  GridPtr grid_;
  ComplexBuffer coeffs_;
};

struct VectorField {
  SpectralField x;
  SpectralField y;

  explicit VectorField(const GridPtr& grid) : x(grid), y(grid) {}
  VectorField(SpectralField fx, SpectralField fy) : x(std::move(fx)), y(std::move(fy)) {}

  const SpectralGrid& grid() const { return x.grid(); }
  const GridPtr& grid_ptr() const { return x.grid_ptr(); }
  SpectralField& operator[](int c) { return c == 0 ? x : y; }
  const SpectralField& operator[](int c) const { return c == 0 ? x : y; }

  VectorField& operator+=(const VectorField& o);
  VectorField& operator-=(const VectorField& o);
  VectorField& operator*=(double c);
  VectorField& add_scaled(double c, const VectorField& o);
  bool is_finite() const { return x.is_finite() && y.is_finite(); }

  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double c, VectorField a) { return a *= c; }
};

// Fourier multiplier |k|^s. The k = 0 coefficient is kept for s == 0 and
// annihilated for s > 0. Throws ConfigError for negative or non-finite s.
SpectralField lambda_pow(const SpectralField& f, double s);

SpectralField derivative(const SpectralField& f, Axis axis);
VectorField gradient(const SpectralField& f);
SpectralField divergence(const VectorField& w);
// Scalar vorticity d_x w_y - d_y w_x.
SpectralField curl(const VectorField& w);
SpectralField laplacian(const SpectralField& f);

// Orthogonal projection onto divergence-free fields; k = 0 untouched.
VectorField leray_project(const VectorField& w);

SpectralField dealias(const SpectralField& f);
VectorField dealias(const VectorField& w);

// ||Lambda^s f||_{L2} (homogeneous) or sqrt(||f||^2 + ||Lambda^s f||^2).
double sobolev_norm(const SpectralField& f, double s, SobolevKind kind);
double sobolev_norm(const VectorField& w, double s, SobolevKind kind);

// Parseval-exact physical L2 pairing over the box.
double inner_product(const SpectralField& f, const SpectralField& g);
double inner_product(const VectorField& a, const VectorField& b);
double l2_norm(const SpectralField& f);
double l2_norm(const VectorField& w);

// Largest modulus of the spectral coefficients.
double max_coeff_abs(const SpectralField& f);

// Pointwise maximum of |w| on the physical grid.
double linf_norm(const SpectralField& f);
double linf_norm(const VectorField& w);

// Copies the overlapping modes of f onto another grid of the same box
// (zero-padding when the target is finer, truncation when coarser).
SpectralField resample(const SpectralField& f, const GridPtr& target);

}  // namespace tcm
