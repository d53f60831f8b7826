#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcm/model.hpp"

namespace tcm {

enum class FieldId { u, v, theta };

std::string_view field_name(FieldId f);
// Accepts "u", "v", "theta".
FieldId parse_field(std::string_view name);

struct NormKey {
  FieldId field;
  double gamma;

  // Column name "<field>_gamma_<gamma>" with gamma in shortest round-trip form.
  std::string column() const;
  bool operator==(const NormKey&) const = default;
};

std::string format_number(double x);

struct DiagnosticsSpec {
  std::vector<NormKey> norms;
  std::vector<double> orders;  // functional orders m, each >= s
};

// Functional values at one order m.
struct FunctionalValues {
  double order = 0.0;
  double A = 0.0;
  double B = 0.0;    // theta slot ||Lambda^m theta||
  double B_s = 0.0;  // theta slot ||grad theta||_{H^{m-1}}
  double X = 0.0;
  double Y = 0.0;
  double sigma_A = 0.0;  // cross-free squared sum behind A
  double sigma_X = 0.0;  // cross-free squared sum behind X
};

struct DiagnosticsRecord {
  double time = 0.0;
  std::vector<std::pair<NormKey, double>> norms;
  std::vector<FunctionalValues> functionals;
  double cross_s = 0.0;
  double cross_1 = 0.0;
  double budget_residual = 0.0;
  double dissipation_rate = 0.0;
  double energy = 0.0;
  double dissipated = 0.0;  // cumulative int dissipation dt
  double norm_sum = 0.0;    // smallness norm tracked by the stability envelope
  std::array<double, 3> linf{};
  double divergence = 0.0;  // max |div u| coefficient relative to |u|
};

// int Lambda^{order-1} v . Lambda^{order-1} grad theta, order >= 1.
double cross_term(const VectorField& v, const SpectralField& theta, double order);

// Sum of the squared norms inside A_m (no cross terms).
double functional_A_sum(const FieldSet& state, const ModelParams& params, double m);
double functional_A(const FieldSet& state, const ModelParams& params, double m);

enum class BVariant {
  higher_order,  // ||grad u||_{H^m dot}, ||v||_{H^m}, ||Lambda^m theta||
  base,          // ||grad u||_{H^m}, ||v||_{H^m}, ||grad theta||_{H^{m-1}}
};
double functional_B(const FieldSet& state, const ModelParams& params, double m,
                    BVariant variant = BVariant::higher_order);

double functional_X_sum(const FieldSet& state, double m);
double functional_X(const FieldSet& state, const ModelParams& params, double m);
double functional_Y(const FieldSet& state, const ModelParams& params, double m);

// Predicted algebraic decay exponent of ||Lambda^gamma field||.
double theory_exponent(FieldId field, double gamma, bool damped);

// ||u||_{H^s} + ||v||_{H^s} + ||theta||_{H^s}, or with ||u||_{H^s dot cap H^1 dot}
// for the damped case.
double smallness_norm(const FieldSet& state, const ModelParams& params);

DiagnosticsRecord evaluate(const TcmState& state, const ModelParams& params,
                           const DiagnosticsSpec& spec, double dissipated);

struct DecayFit {
  std::string field;
  double gamma = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  double exponent = 0.0;
  double r_squared = 0.0;
  double theory_exponent = 0.0;
  std::size_t samples = 0;
};

struct Sample {
  double t;
  double value;
};

// Least-squares slope of log(value) against log(1 + t) over t in [t0, t1].
// Needs at least 8 samples in the window; throws NonPositiveSeriesError for
// values <= 0 and ConfigError for a bad window or too few samples.
DecayFit decay_fit(std::span<const Sample> series, double t0, double t1);

// Pairs of consecutive samples where X_m^2 grows by more than
// 10 * dt^4 * max(Y_m^2) of the pair.
struct MonotonicityReport {
  std::size_t intervals = 0;
  std::size_t violations = 0;
  double worst_excess = 0.0;  // largest (increase - tolerance), <= 0 when clean
};
MonotonicityReport check_x_monotonicity(std::span<const DiagnosticsRecord> records,
                                        std::size_t order_index, double dt);

// Counts samples outside (3/4)A^2 <= sigma_A <= (5/4)A^2 or
// X^2/2 <= sigma_X <= 2 X^2.
struct EquivalenceReport {
  std::size_t samples = 0;
  std::size_t a_violations = 0;
  std::size_t x_violations = 0;
};
EquivalenceReport check_equivalence_bands(std::span<const DiagnosticsRecord> records);

// Calibrates C on the first quartile of samples from
// 1/2 d/dt A^2 + B^2 <= C (A + A^{s+1}) B^2 (trapezoid difference quotients,
// base B variant) and counts later intervals that exceed it.
struct DifferentialBoundReport {
  double calibrated_c = 0.0;
  std::size_t checked = 0;
  std::size_t violations = 0;
};
DifferentialBoundReport check_differential_bound(std::span<const DiagnosticsRecord> records,
                                                 std::size_t order_index, double s);

}  // namespace tcm
