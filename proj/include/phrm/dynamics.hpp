// dynamics.hpp: the pseudo-Hermitian generators A1 and A2, the closed-form
// Dyson-metric flow, the ODE oracle for it, and Dyson's formula
// h = μAμ⁻¹ + iμ̇μ⁻¹ checked as an operator identity.
#pragma once

#include "phrm/spectral.hpp"
#include "phrm/types.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace phrm {

enum class Regime { unbroken, broken, exceptional };
enum class HamiltonianKind { A1, A2 };

std::string_view to_string(Regime r);
std::string_view to_string(HamiltonianKind k);
HamiltonianKind parse_hamiltonian_kind(std::string_view s);

struct CouplingParams {
    double b = 1.2;
    double c = 1.0;
    double c1 = 2.0;  // integration constant C₁
    double c2 = 0.0;  // integration constant C₂ (time origin)

    double discriminant() const { return b * b - c * c; }
    // b = c (up to 1e-14 relative in b² - c²) is the exceptional point.
    Regime regime() const;
    // b, c >= 0 and every field finite; throws ConfigError.
    void validate() const;
};

struct PseudoHermitianPair {
    Matrix a_matrix;  // 2M x 2M, reduced basis
    HamiltonianKind kind = HamiltonianKind::A1;
    // x_k + √(b²-c²)√x_k then x_k - √(b²-c²)√x_k, for k = 1..M.
    std::vector<cplx> spectrum;
};

// A1 = Û + bR̂ + icŜ,  A2 = Û + b T̂ Û^{-1/2} - icŜ.
PseudoHermitianPair hamiltonian(const ReducedOperators& ops, const CouplingParams& params,
                                HamiltonianKind kind);

std::vector<cplx> closed_form_spectrum(const RealVector& x, const CouplingParams& params);

// Closed-form metric flow for one Wishart eigenvalue x. With τ = t + C₂,
// d = b² - c², K = √(C₁² + d) and φ = 2√(x d) τ:
//
//   sinh(2β√x) = C₁ sin(φ) / √d
//   exp(4αx)   = (b-c)/(b+c) · (K + C₁ cos φ) / (K - C₁ cos φ)
//   ν          = d K / (K² - C₁² cos² φ)
//   γ          = √x ∫ν = ½ atan(K tan(φ) / √d), unwrapped to be continuous
//
// The broken regime (d < 0) is the analytic continuation and is evaluated
// in complex arithmetic; results are checked to be real. At d = 0 the
// d → 0 limits are used and α is undefined.
class FlowSolution {
public:
    FlowSolution(const CouplingParams& params, double x);

    const CouplingParams& params() const { return params_; }
    double x() const { return x_; }
    Regime regime() const { return regime_; }

    double sigma(double t) const;  // sinh(2β√x)
    double beta(double t) const;
    double beta_dot(double t) const;
    double exp_four_alpha_x(double t) const;
    double alpha(double t) const;
    double alpha_dot(double t) const;
    double nu(double t) const;
    double gamma(double t) const;
    double nu_integral(double t) const;  // γ / √x
    // Half-periods crossed by the atan∘tan branch, floor(φ/π + ½); 0 unless unbroken.
    int branch_count(double t) const;
    // lim γ as t → ∞. Broken: ½ atan(K / √(c²-b²)); exceptional: ±π/4.
    // Throws UnsupportedParameterError in the unbroken regime (γ grows without bound).
    double gamma_infinity() const;

private:
    cplx phase(double t) const;
    double real_checked(cplx v, const char* what) const;

    CouplingParams params_;
    double x_;
    double d_;
    cplx sqrt_d_;
    double k_;
    Regime regime_;
};

FlowSolution flow_closed_form(const CouplingParams& params, double x);
std::vector<FlowSolution> flows_for(const RealVector& x, const CouplingParams& params);

struct FlowInit {
    double alpha0 = 0.0;  // δ for A2
    double beta0 = 0.0;   // ζ for A2
    double nu_integral0 = 0.0;
};

// Initial values from the closed form at t0. For A2 the A1 solution is
// mapped through 2δ√x = 2αx, ζ = β.
FlowInit closed_form_init(const FlowSolution& flow, double t0, HamiltonianKind kind);

struct FlowTrajectory {
    std::vector<double> t;
    std::vector<double> alpha;        // δ for A2
    std::vector<double> beta;         // ζ for A2
    std::vector<double> nu_integral;  // ∫ν (A1) or ∫ξ (A2)
    double step = 0.0;
    double richardson = 0.0;
};

// Fourth-order integration of the metric equations
//   A1: α̇ = -tanh(2β√x)/√x · [b cosh 2αx + c sinh 2αx],  β̇ = b sinh 2αx + c cosh 2αx
//   A2: δ̇ = -tanh(2ζ√x)/√x · [b cosh 2δ√x + c sinh 2δ√x], ζ̇ = b sinh 2δ√x + c cosh 2δ√x
// together with the integral of ν (resp. ξ). Step is halved until every
// sample moves by less than 1e-8; throws OracleError otherwise.
FlowTrajectory flow_ode_oracle(const CouplingParams& params, double x,
                               std::span<const double> t_grid, const FlowInit& init,
                               HamiltonianKind kind = HamiltonianKind::A1);

// Whether the A2 metric flow reproduces ν_I. Informational only; see README.
struct A2FlowFinding {
    double max_xi_integral_gap = 0.0;  // max_t |ξ_I - ν_I|
    double max_delta_gap = 0.0;        // max_t |2δ√x - 2αx|
};

A2FlowFinding a2_flow_discrepancy(const CouplingParams& params, double x,
                                  std::span<const double> t_grid);

// Functions of Û on the reduced basis: diag(v_1..v_M, v_1..v_M).
Matrix mode_diagonal(const RealVector& per_mode);

struct DysonMetric {
    Matrix mu;
    Matrix mu_dot;
};

// μ = exp(-βŜ) exp(αT̂) and its time derivative for A1, built mode by mode.
// The sign of β is the one for which Dyson's formula removes the
// non-Hermitian part with Ŝ as defined in spectral.hpp.
DysonMetric dyson_metric(const ReducedOperators& ops, const CouplingParams& params, double t);

// μAμ⁻¹ + iμ̇μ⁻¹. Throws ConditioningError if cond(μ) > 1e12.
Matrix dyson_transform(const PseudoHermitianPair& a, const Matrix& mu, const Matrix& mu_dot);

// Û + ν(Û, t) R̂.
Matrix hermitian_generator(const ReducedOperators& ops, const CouplingParams& params, double t);

// 1e-8 * (1 + ||Û||_max)
double dyson_tolerance(const ReducedOperators& ops);

struct DensityCheckOptions {
    double tolerance = 1e-6;
    bool zero_mu_dot = false;  // fault injection: drop iμ̇μ⁻¹ from h
};

struct DensityCheckReport {
    double max_spectrum_error = 0.0;
    double max_matrix_error = 0.0;
    bool passed = false;
};

// Evolves ρ_A under iρ̇ = [A, ρ] and ρ_h under iρ̇ = [h(t), ρ] with
// h = dyson_transform(A, μ, μ̇), starting from ρ_h = |ψ⟩⟨ψ| and
// ρ_A = μ⁻¹ρ_hμ, then compares μρ_Aμ⁻¹ with ρ_h at every grid point.
// Only A1 has a closed-form metric; A2 throws UnsupportedParameterError.
DensityCheckReport density_evolution_check(const PseudoHermitianPair& a,
                                           const ReducedOperators& ops,
                                           const CouplingParams& params,
                                           std::span<const double> t_grid, const Vector& psi_h0,
                                           const DensityCheckOptions& options = {});

std::vector<double> linspace(double start, double end, int count);

}  // namespace phrm
