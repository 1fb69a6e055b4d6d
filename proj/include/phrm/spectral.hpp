// spectral.hpp: the Schmidt-paired eigenbasis of WW† / W†W, the reduced
// operators Û, R̂, Ŝ, T̂ on its 2M-dimensional span, the Pauli-like triple g,
// and the Bloch projector.
#pragma once

#include "phrm/ensemble.hpp"
#include "phrm/types.hpp"

namespace phrm {

// Paired eigen-data of the bipartite Wishart blocks. Column k of x_vecs is
// |x_k⟩ (support in the first M coordinates), column k of y_vecs is
// |y_k⟩ = W†|x_k⟩/√x_k (support in the last N-M coordinates). x is strictly
// descending.
//
// Phase convention: the largest-magnitude component of each |x_k⟩ is real
// and positive; |y_k⟩ is then fixed by the W† relation.
struct SchmidtBasis {
    RealVector x;
    Matrix x_vecs;  // N x M
    Matrix y_vecs;  // N x M

    int m() const { return static_cast<int>(x.size()); }
    int n() const { return static_cast<int>(x_vecs.rows()); }
    // N x 2M column stack (x_1 .. x_M, y_1 .. y_M).
    Matrix stacked() const;
};

inline constexpr double kTieThreshold = 1e-12;

// Throws DegenerateEnsembleError if some x_k <= 1e-10 * x_1 and
// DegenerateSpectrumError if two eigenvalues are closer than kTieThreshold.
SchmidtBasis schmidt_basis(const ProjectedBlock& block);

// Operators in the ordered basis (|x_1⟩..|x_M⟩, |y_1⟩..|y_M⟩):
//   û = diag(x, x)          t̂ = diag(x, -x)
//   r̂ = [[0, D], [D, 0]]     ŝ = [[0, -iD], [iD, 0]],   D = diag(√x_k)
struct ReducedOperators {
    RealVector x;
    Matrix u_hat, r_hat, s_hat, t_hat;

    int m() const { return static_cast<int>(x.size()); }
};

ReducedOperators reduced_operators(const SchmidtBasis& basis);
ReducedOperators reduced_operators(const RealVector& x);

// V† A V with V = basis.stacked().
Matrix project(const Matrix& full, const SchmidtBasis& basis);

struct PauliTriple {
    Matrix g1, g2, g3;

    const Matrix& operator[](int axis) const;  // 1-based, matching g_1..g_3
};

// g = (Û^{-1/2} R̂, Û^{-1/2} Ŝ, Û^{-1} T̂). Throws RankError for singular Û.
PauliTriple pauli_triple(const ReducedOperators& ops);

enum class Axis { x = 1, y = 2, z = 3 };

// exp(a g_i) g_j exp(-a g_i). Throws ArgumentError when i == j.
Matrix bch_conjugate(const PauliTriple& triple, double a, Axis i, Axis j);

struct BlochVector {
    double theta = 0.0;  // [0, π]
    double phi = 0.0;    // [0, 2π)

    static BlochVector make(double theta, double phi);
};

// (1 + u·g)/2 with u = (sinθ cosφ, sinθ sinφ, cosθ).
Matrix bloch_projector(const ReducedOperators& ops, const BlochVector& bloch);

// cos(θ/2)|x_k⟩ + sin(θ/2) e^{iφ}|y_k⟩ in reduced coordinates (k is 0-based).
Vector bloch_state(int m, int k, const BlochVector& bloch);

// Everything a caller needs from one sampled matrix. Near-tied spectra are
// resampled with seed + 1 (up to max_resamples times); `resamples` records
// how often that happened.
struct SampledSystem {
    EnsembleConfig config;  // the config that was finally used
    int resamples = 0;
    ProjectedBlock block;
    OperatorQuartet quartet;
    SchmidtBasis basis;
    ReducedOperators ops;
};

SampledSystem sample_system(const EnsembleConfig& config, int max_resamples = 16);

}  // namespace phrm
