#include "tcm/inequality_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>

#include "tcm/errors.hpp"
#include "tcm/random_fields.hpp"

namespace tcm {

namespace {

// Grids with twice the resolution of a given grid, shared across calls.
GridPtr padded_grid(const SpectralGrid& grid) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, GridPtr> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{grid.n(), grid.box_length()}];
  if (!slot) slot = SpectralGrid::make(2 * grid.n(), grid.box_length());
  return slot;
}

double norm_of_values(std::span<const double> values, double p, double cell_area) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  double sum = 0.0;
  for (double v : values) sum += std::pow(std::abs(v), p);
  return std::pow(sum * cell_area, 1.0 / p);
}

double median_of(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  if (xs.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(xs.begin(), mid);
  return 0.5 * (lo + hi);
}

PhysicalField multiply(const PhysicalField& a, const PhysicalField& b) {
  PhysicalField out(a.grid_ptr());
  const auto x = a.values();
  const auto y = b.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = x[i] * y[i];
  return out;
}

// Largest |mx| or |my| carrying a nonzero coefficient.
int band_of(const SpectralField& f) {
  const auto& g = f.grid();
  const auto c = f.coeffs();
  int band = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] != Complex(0.0)) band = std::max({band, std::abs(g.mode_x(i)), g.mode_y(i)});
  }
  return band;
}

// Zeroes modes outside |mx|, |my| <= band. A product of fields with bands b1
// and b2 has band b1 + b2, so anything beyond is transform round-off, which
// Lambda^s would otherwise amplify.
SpectralField truncate(SpectralField f, int band) {
  const auto& g = f.grid();
  auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::abs(g.mode_x(i)) > band || g.mode_y(i) > band) c[i] = 0.0;
  }
  return f;
}

}  // namespace

double lp_norm(const SpectralField& f, double p) {
  const GridPtr fine = padded_grid(f.grid());
  const PhysicalField phys = resample(f, fine).to_physical();
  return norm_of_values(phys.values(), p, fine->cell_area());
}

double lp_norm(const VectorField& f, double p) {
  const GridPtr fine = padded_grid(f.grid());
  const PhysicalField a = resample(f.x, fine).to_physical();
  const PhysicalField b = resample(f.y, fine).to_physical();
  RealBuffer mag(a.values().size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(a.values()[i], b.values()[i]);
  return norm_of_values(mag, p, fine->cell_area());
}

double homogeneous_norm(const SpectralField& f, double s) {
  const auto& grid = f.grid();
  const auto k2 = grid.k2();
  const auto w = grid.weight();
  const auto c = f.coeffs();
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (k2[i] == 0.0) continue;
    const double m2 = std::norm(c[i]);
    if (m2 == 0.0) continue;
    sum += w[i] * std::pow(k2[i], s) * m2;
  }
  return std::sqrt(grid.area() * sum);
}

double gn_ratio(const SpectralField& f) { return lp_norm(f, 4.0) / homogeneous_norm(f, 0.5); }

double gn_lambda_ratio(const SpectralField& f, double s) {
  return lp_norm(lambda_pow(f, s - 1.0), 2.0 / (s - 1.0)) / homogeneous_norm(f, 1.0);
}

double gn_gradient_ratio(const SpectralField& f, double s) {
  return lp_norm(gradient(f), 2.0 / (2.0 - s)) / homogeneous_norm(f, s);
}

double interpolation_ratio(const SpectralField& f, double s1, double s, double s2,
                           double exponent_bias) {
  if (!(0.0 <= s1 && s1 < s && s < s2)) {
    throw ConfigError("interpolation: indices must satisfy 0 <= s1 < s < s2");
  }
  const double lhs = homogeneous_norm(f, s + exponent_bias);
  const double a = (s2 - s) / (s2 - s1);
  const double b = (s - s1) / (s2 - s1);
  return lhs / (std::pow(homogeneous_norm(f, s1), a) * std::pow(homogeneous_norm(f, s2), b));
}

double linf_interpolation_ratio(const SpectralField& f, double s1, double s2) {
  if (!(0.0 <= s1 && s1 < 1.0 && 1.0 < s2)) {
    throw ConfigError("L-infinity interpolation needs 0 <= s1 < 1 < s2");
  }
  const double a = (s2 - 1.0) / (s2 - s1);
  const double b = (1.0 - s1) / (s2 - s1);
  return lp_norm(f, INFINITY) /
         (std::pow(homogeneous_norm(f, s1), a) * std::pow(homogeneous_norm(f, s2), b));
}

double kato_ponce_commutator(const SpectralField& f, const SpectralField& g, double s) {
  if (!(s > 0.0)) throw ConfigError("kato_ponce: s must be > 0");
  const GridPtr fine = padded_grid(f.grid());
  const SpectralField F = resample(f, fine);
  const SpectralField G = resample(g, fine);
  const int band = band_of(f) + band_of(g);
  const PhysicalField fp = F.to_physical();
  const SpectralField fg = truncate(multiply(fp, G.to_physical()).to_spectral(), band);
  const SpectralField f_lg = truncate(multiply(fp, lambda_pow(G, s).to_physical()).to_spectral(), band);
  return l2_norm(lambda_pow(fg, s) - f_lg);
}

double kato_ponce_ratio(const SpectralField& f, const SpectralField& g, double s) {
  const double rhs = lp_norm(gradient(f), INFINITY) * homogeneous_norm(g, s - 1.0) +
                     lp_norm(g, INFINITY) * homogeneous_norm(f, s);
  return kato_ponce_commutator(f, g, s) / rhs;
}

double composition_ratio(const SpectralField& theta, double s,
                         const std::function<double(double)>& law) {
  if (!(s >= 1.0)) throw ConfigError("composition: s must be >= 1");
  const GridPtr fine = padded_grid(theta.grid());
  PhysicalField composed = resample(theta, fine).to_physical();
  const double h0 = law(0.0);
  for (double& x : composed.values()) x = law(x) - h0;
  const double lhs = homogeneous_norm(composed.to_spectral(), s);
  const double power = std::ceil(s - 1.0);
  const double rhs = (1.0 + std::pow(homogeneous_norm(theta, 1.0), power)) * homogeneous_norm(theta, s);
  return lhs / rhs;
}

double RatioSeries::worst_ratio() const {
  return worst.empty() ? 0.0 : *std::max_element(worst.begin(), worst.end());
}

bool RatioSeries::stable() const {
  if (worst.size() < 2) return true;
  const double hi = *std::max_element(worst.begin(), worst.end());
  const double lo = *std::min_element(worst.begin(), worst.end());
  return lo > 0.0 && hi / lo < 2.0;
}

namespace {

// One trial returns one ratio per form (NaN marks a skipped degenerate draw).
using Trial = std::function<std::vector<double>(const GridPtr&, Rng&, int band)>;

InequalityReport run_check(const std::string& name, const std::vector<std::string>& labels,
                           const LabOptions& options, std::uint64_t salt, const Trial& trial) {
  if (options.trials == 0) throw ConfigError("inequality lab: trials must be >= 1");
  if (options.resolutions.empty()) throw ConfigError("inequality lab: no resolutions given");
  const int coarsest = *std::min_element(options.resolutions.begin(), options.resolutions.end());
  // Same physical band at every resolution so only the discretization changes.
  const int band = std::max(1, SpectralGrid::make(coarsest, options.box_length)->dealias_limit() / 2);

  InequalityReport rep;
  rep.name = name;
  rep.resolutions = options.resolutions;
  std::vector<std::vector<double>> pooled(labels.size());
  for (const auto& label : labels) rep.forms.push_back({label, {}, {}, {}, 0.0});

  for (int n : options.resolutions) {
    const GridPtr grid = SpectralGrid::make(n, options.box_length);
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(salt)};
    Rng rng(seq);
    std::vector<std::vector<double>> ratios(labels.size());
    for (std::size_t t = 0; t < options.trials; ++t) {
      const auto r = trial(grid, rng, band);
      for (std::size_t k = 0; k < labels.size(); ++k) {
        if (std::isfinite(r[k])) ratios[k].push_back(r[k]);
      }
      ++rep.trials;
    }
    for (std::size_t k = 0; k < labels.size(); ++k) {
      auto& form = rep.forms[k];
      form.resolutions.push_back(n);
      form.worst.push_back(ratios[k].empty() ? 0.0 : *std::max_element(ratios[k].begin(), ratios[k].end()));
      form.median.push_back(median_of(ratios[k]));
      pooled[k].insert(pooled[k].end(), ratios[k].begin(), ratios[k].end());
    }
  }
  rep.stable = true;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    rep.forms[k].pooled_median = median_of(pooled[k]);
    rep.stable = rep.stable && rep.forms[k].stable();
  }
  rep.worst_ratio = rep.forms[0].worst_ratio();
  rep.median_ratio = rep.forms[0].pooled_median;
  return rep;
}

SpectralField draw(const GridPtr& grid, Rng& rng, int band) {
  std::uniform_real_distribution<double> slope(1.5, 3.0);
  const PowerLawSpectrum spectrum{slope(rng)};
  return random_field(grid, rng, [&](double m) { return spectrum.amplitude(m); }, band);
}

}  // namespace

InequalityReport check_gn(const LabOptions& options) {
  return run_check("gagliardo_nirenberg", {"L4_vs_Lambda_half", "Lambda_s-1_vs_grad", "grad_vs_Lambda_s"},
                   options, 1, [](const GridPtr& grid, Rng& rng, int band) {
                     std::uniform_real_distribution<double> pick_s(1.1, 1.9);
                     const SpectralField f = draw(grid, rng, band);
                     const double s = pick_s(rng);
                     if (homogeneous_norm(f, 0.0) == 0.0) return std::vector<double>(3, NAN);
                     return std::vector<double>{gn_ratio(f), gn_lambda_ratio(f, s), gn_gradient_ratio(f, s)};
                   });
}

InequalityReport check_interpolation(const LabOptions& options, double s1, double s, double s2) {
  if (!(0.0 <= s1 && s1 < s && s < s2)) {
    throw ConfigError("interpolation: indices must satisfy 0 <= s1 < s < s2");
  }
  // The L-infinity form needs s1 < 1 < s2; fall back to (0, 2) otherwise.
  const bool own = s1 < 1.0 && s2 > 1.0;
  const double a = own ? s1 : 0.0;
  const double b = own ? s2 : 2.0;
  const double bias = options.interpolation_exponent_bias;
  auto rep = run_check("interpolation", {"Lambda_s_holder", "Linf_bound"}, options, 2,
                       [=](const GridPtr& grid, Rng& rng, int band) {
                         const SpectralField f = draw(grid, rng, band);
                         if (homogeneous_norm(f, 0.0) == 0.0) return std::vector<double>(2, NAN);
                         return std::vector<double>{interpolation_ratio(f, s1, s, s2, bias),
                                                    linf_interpolation_ratio(f, a, b)};
                       });
  rep.has_exact_constant = true;
  rep.exact_constant = 1.0;
  rep.exact_constant_ok = rep.worst_ratio <= 1.0 + 1e-12;
  return rep;
}

InequalityReport check_kato_ponce(const LabOptions& options, double s) {
  if (!(s > 0.0)) throw ConfigError("kato_ponce: s must be > 0");
  return run_check("kato_ponce", {"commutator"}, options, 3,
                   [=](const GridPtr& grid, Rng& rng, int band) {
                     const SpectralField f = draw(grid, rng, band);
                     const SpectralField g = draw(grid, rng, band);
                     return std::vector<double>{kato_ponce_ratio(f, g, s)};
                   });
}

InequalityReport check_composition(const LabOptions& options, double s,
                                   const std::function<double(double)>& law) {
  if (!(s >= 1.0)) throw ConfigError("composition: s must be >= 1");
  return run_check("moser_composition", {"composition"}, options, 4,
                   [=](const GridPtr& grid, Rng& rng, int band) {
                     SpectralField theta = draw(grid, rng, band);
                     const double peak = lp_norm(theta, INFINITY);
                     if (peak == 0.0) return std::vector<double>{NAN};
                     theta *= 1.0 / peak;
                     return std::vector<double>{composition_ratio(theta, s, law)};
                   });
}

nlohmann::json to_json(const InequalityReport& report) {
  nlohmann::json j;
  j["name"] = report.name;
  j["trials"] = report.trials;
  j["worst_ratio"] = report.worst_ratio;
  j["median_ratio"] = report.median_ratio;
  j["resolutions"] = report.resolutions;
  j["stable"] = report.stable;
  if (report.has_exact_constant) {
    j["exact_constant"] = report.exact_constant;
    j["exact_constant_ok"] = report.exact_constant_ok;
  }
  auto& forms = j["forms"] = nlohmann::json::array();
  for (const auto& f : report.forms) {
    forms.push_back({{"label", f.label},
                     {"resolutions", f.resolutions},
                     {"worst", f.worst},
                     {"median", f.median},
                     {"pooled_median", f.pooled_median},
                     {"stable", f.stable()}});
  }
  return j;
}

std::string summary_table(const std::vector<InequalityReport>& reports) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-22s %-20s %8s %14s %14s %8s\n", "inequality", "form", "trials",
                "worst", "median", "stable");
  out += line;
  for (const auto& r : reports) {
    for (const auto& f : r.forms) {
      std::snprintf(line, sizeof line, "%-22s %-20s %8zu %14.6e %14.6e %8s\n", r.name.c_str(),
                    f.label.c_str(), r.trials, f.worst_ratio(), f.pooled_median,
                    f.stable() ? "yes" : "NO");
      out += line;
    }
    if (r.has_exact_constant) {
      std::snprintf(line, sizeof line, "%-22s %-20s %8s %14.6e %14s %8s\n", r.name.c_str(),
                    "exact_constant", "", r.exact_constant, "", r.exact_constant_ok ? "yes" : "NO");
      out += line;
    }
  }
  return out;
}

}  // namespace tcm
