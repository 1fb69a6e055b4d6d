// entanglement.hpp: Bell states built from generator eigenstates, their time
// evolution, reduced density matrices and von Neumann entropy.
//
// Two-qubit vectors use the product basis |ab⟩ at index 2a + b, where a is
// the m-qubit and b the n-qubit. Level 0 is |X⁺⟩ (generator R) or |x⟩
// (generator T); level 1 is |X⁻⟩ or |y⟩.
#pragma once

#include "phrm/dynamics.hpp"
#include "phrm/spectral.hpp"
#include "phrm/types.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace phrm {

using Vector2 = Eigen::Vector2cd;
using Vector4 = Eigen::Vector4cd;
using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;

enum class Generator { R, T };

std::string_view to_string(Generator g);
Generator generator_for(HamiltonianKind kind);

struct BellPair {
    int m_index = 1;  // 1-based mode indices, m != n
    int n_index = 2;
    Generator generator = Generator::R;
    Vector4 phi_plus;   // (|00⟩ + |11⟩)/√2
    Vector4 phi_minus;  // (|00⟩ - |11⟩)/√2

    // Throws ArgumentError unless 1 <= m, n <= modes and m != n.
    static BellPair make(int m_index, int n_index, Generator generator, int modes);
};

// Qubit level (0 or 1) of mode k (0-based) as a vector in the 2M reduced
// coordinates: |X^±_k⟩ = (|x_k⟩ ± |y_k⟩)/√2 for R, |x_k⟩ / |y_k⟩ for T.
Vector qubit_vector(Generator generator, int modes, int k, int level);

struct EvolvedState {
    Vector4 chi;
    double t = 0.0;
    double delta = 0.0;  // γ_m + γ_n
    double theta = 0.0;
    BellPair pair;
};

// χ(0) = cos(θ/2) Φ⁺ + sin(θ/2) Φ⁻.
EvolvedState initial_state(double theta, const BellPair& pair);

// Evolves χ(0) of `state` to time t under exp(-iγ(Û) G) on both qubits, with
// G = R̂/√Û or T̂/Û. The global phase from Û is dropped.
//   R: χ(t) = (cos(θ/2)cosΔ - i sin(θ/2)sinΔ) Φ⁺ + (sin(θ/2)cosΔ - i cos(θ/2)sinΔ) Φ⁻
//   T: the tensor-product phase map |ab⟩ ↦ e^{-i(±γ_m ± γ_n)}|ab⟩
// Throws ArgumentError if a pair index exceeds flows.size().
EvolvedState evolve(const EvolvedState& state, std::span<const FlowSolution> flows, double t);

// Same as evolve but from explicit angles, for oracle comparisons.
Vector4 evolve_chi(Generator generator, double theta, double gamma_m, double gamma_n);

struct ReducedDensity {
    Matrix2 rho;
    double lambda1 = 1.0;
    double lambda2 = 0.0;
};

// Traces out the n-qubit by explicit index contraction,
// ρ_ik = Σ_l χ_il conj(χ_kl). λ1 is the eigenvalue paired with ρ_00.
ReducedDensity partial_trace(const Vector4& chi);

// ½ diag(1 + sinθ cos2Δ, 1 - sinθ cos2Δ).
ReducedDensity closed_form_reduced_density(double theta, double delta);

// -λ1 ln λ1 - λ2 ln λ2 with 0 ln 0 = 0. Throws NumericalValidityError for
// eigenvalues outside [-1e-12, 1 + 1e-12].
double von_neumann(double lambda1, double lambda2);
double von_neumann(const ReducedDensity& rho);

// Dense route: projects γ_k G onto each qubit, forms the 4x4 two-qubit
// generator γ_m g_m ⊗ 1 + 1 ⊗ γ_n g_n and applies its matrix exponential.
Vector4 brute_force_evolve(const ReducedOperators& ops, const BellPair& pair, double theta,
                           double gamma_m, double gamma_n);

struct EntropyRecord {
    double t = 0.0;
    double delta = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double entropy = 0.0;
};

struct EntropyTrace {
    std::vector<EntropyRecord> records;
};

double bell_delta(std::span<const FlowSolution> flows, const BellPair& pair, double t);

// Closed-form entropy per sample: λ1,2 = ½(1 ± sinθ cos2Δ(t)).
EntropyTrace entropy_trace(std::span<const FlowSolution> flows, const BellPair& pair, double theta,
                           std::span<const double> t_grid);
EntropyTrace entropy_trace(const ReducedOperators& ops, const CouplingParams& params,
                           const BellPair& pair, double theta, std::span<const double> t_grid);

// Single Bloch state cos(θ/2)|x_k⟩ + e^{iφ} sin(θ/2)|y_k⟩ evolved by
// exp(-iÛt - iγ G) in the (x_k, y_k) coordinates: A1 uses G = R̂/√Û (σ_x on
// the pair), A2 uses G = T̂/Û (σ_z on the pair).
Vector2 single_state_evolve(HamiltonianKind kind, const BlochVector& bloch, double gamma, double x,
                            double t);

// e^{-ixt}(cos(θ/2 - γ), e^{iφ} sin(θ/2 - γ)), the rotation form of the A1
// evolution. Coincides with single_state_evolve only at φ = π/2.
Vector2 single_state_rotation(const BlochVector& bloch, double gamma, double x, double t);

}  // namespace phrm
