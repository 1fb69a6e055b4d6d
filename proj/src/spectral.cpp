#include "phrm/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace phrm {

Matrix SchmidtBasis::stacked() const {
    Matrix v(n(), 2 * m());
    v << x_vecs, y_vecs;
    return v;
}

SchmidtBasis schmidt_basis(const ProjectedBlock& block) {
    const int n = block.n();
    const int m = block.m();
    const Matrix& h = block.h_block;

    Eigen::SelfAdjointEigenSolver<Matrix> solver(h * h.adjoint());
    if (solver.info() != Eigen::Success) {
        throw Error("schmidt_basis: eigen decomposition of WW† failed");
    }
    // Eigen returns ascending order.
    const RealVector asc = solver.eigenvalues();
    const Matrix asc_vecs = solver.eigenvectors();

    SchmidtBasis basis;
    basis.x.resize(m);
    basis.x_vecs = Matrix::Zero(n, m);
    basis.y_vecs = Matrix::Zero(n, m);

    const double x1 = asc(m - 1);
    const double tol_rank = 1e-10 * x1;
    for (int k = 0; k < m; ++k) {
        const int src = m - 1 - k;
        const double xk = asc(src);
        if (!(xk > tol_rank)) {
            throw DegenerateEnsembleError("schmidt_basis: WW† is rank deficient (x_" +
                                          std::to_string(k + 1) + " = " + std::to_string(xk) +
                                          "); resample");
        }
        Vector v = asc_vecs.col(src);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        v *= std::conj(v(imax)) / std::abs(v(imax));
        v(imax) = std::abs(v(imax));

        basis.x(k) = xk;
        basis.x_vecs.col(k).head(m) = v;
        basis.y_vecs.col(k) = block.w.adjoint() * basis.x_vecs.col(k) / std::sqrt(xk);
    }
    for (int k = 0; k + 1 < m; ++k) {
        if (basis.x(k) - basis.x(k + 1) < kTieThreshold) {
            throw DegenerateSpectrumError("schmidt_basis: Wishart eigenvalues " +
                                          std::to_string(k + 1) + " and " +
                                          std::to_string(k + 2) + " are tied");
        }
    }
    return basis;
}

ReducedOperators reduced_operators(const RealVector& x) {
    const auto m = static_cast<int>(x.size());
    const RealVector root = x.cwiseSqrt();

    ReducedOperators ops;
    ops.x = x;
    ops.u_hat = Matrix::Zero(2 * m, 2 * m);
    ops.r_hat = Matrix::Zero(2 * m, 2 * m);
    ops.s_hat = Matrix::Zero(2 * m, 2 * m);
    ops.t_hat = Matrix::Zero(2 * m, 2 * m);
    for (int k = 0; k < m; ++k) {
        const int p = k;
        const int q = m + k;
        ops.u_hat(p, p) = x(k);
        ops.u_hat(q, q) = x(k);
        ops.t_hat(p, p) = x(k);
        ops.t_hat(q, q) = -x(k);
        ops.r_hat(p, q) = root(k);
        ops.r_hat(q, p) = root(k);
        // √x_k here, not the x_k of the printed expansion: only this scaling
        // reproduces the ±√x_k spectrum and the projection of S.
        ops.s_hat(p, q) = -kI * root(k);
        ops.s_hat(q, p) = kI * root(k);
    }
    return ops;
}

ReducedOperators reduced_operators(const SchmidtBasis& basis) {
    return reduced_operators(basis.x);
}

Matrix project(const Matrix& full, const SchmidtBasis& basis) {
    const Matrix v = basis.stacked();
    return v.adjoint() * full * v;
}

const Matrix& PauliTriple::operator[](int axis) const {
    switch (axis) {
        case 1: return g1;
        case 2: return g2;
        case 3: return g3;
        default: throw ArgumentError("PauliTriple: axis must be 1, 2 or 3");
    }
}

PauliTriple pauli_triple(const ReducedOperators& ops) {
    const RealVector diag = ops.u_hat.diagonal().real();
    const double top = diag.maxCoeff();
    if (!(diag.minCoeff() > 1e-10 * top)) {
        throw RankError("pauli_triple: Û is singular");
    }
    // Û is diagonal in the reduced basis, so its functions act entrywise.
    const Matrix inv_sqrt = diag.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal();
    const Matrix inv = diag.cwiseInverse().cast<cplx>().asDiagonal();
    return PauliTriple{
        .g1 = inv_sqrt * ops.r_hat,
        .g2 = inv_sqrt * ops.s_hat,
        .g3 = inv * ops.t_hat,
    };
}

Matrix bch_conjugate(const PauliTriple& triple, double a, Axis i, Axis j) {
    if (i == j) throw ArgumentError("bch_conjugate: axes must differ");
    const Matrix& gi = triple[static_cast<int>(i)];
    const Matrix& gj = triple[static_cast<int>(j)];
    const auto id = Matrix::Identity(gi.rows(), gi.cols());
    // g_i² = 1, so exp(±a g_i) = cosh(a) ± sinh(a) g_i.
    const Matrix fwd = std::cosh(a) * id + std::sinh(a) * gi;
    const Matrix bwd = std::cosh(a) * id - std::sinh(a) * gi;
    return fwd * gj * bwd;
}

BlochVector BlochVector::make(double theta, double phi) {
    if (!std::isfinite(theta) || !std::isfinite(phi)) {
        throw ArgumentError("BlochVector: angles must be finite");
    }
    if (theta < 0.0 || theta > std::numbers::pi) throw ArgumentError("BlochVector: theta must lie in [0, π]");
    if (phi < 0.0 || phi >= 2.0 * std::numbers::pi) throw ArgumentError("BlochVector: phi must lie in [0, 2π)");
    return BlochVector{theta, phi};
}

Matrix bloch_projector(const ReducedOperators& ops, const BlochVector& bloch) {
    const PauliTriple g = pauli_triple(ops);
    const double st = std::sin(bloch.theta);
    const Matrix ug = st * std::cos(bloch.phi) * g.g1 + st * std::sin(bloch.phi) * g.g2 +
                      std::cos(bloch.theta) * g.g3;
    return 0.5 * (Matrix::Identity(ug.rows(), ug.cols()) + ug);
}

Vector bloch_state(int m, int k, const BlochVector& bloch) {
    if (k < 0 || k >= m) throw ArgumentError("bloch_state: mode index out of range");
    Vector v = Vector::Zero(2 * m);
    v(k) = std::cos(bloch.theta / 2);
    v(m + k) = std::sin(bloch.theta / 2) * std::exp(kI * bloch.phi);
    return v;
}

SampledSystem sample_system(const EnsembleConfig& config, int max_resamples) {
    SampledSystem sys;
    sys.config = config;
    for (;;) {
        sys.block = sample_block(sys.config);
        try {
            sys.basis = schmidt_basis(sys.block);
            break;
        } catch (const DegenerateSpectrumError&) {
            if (sys.resamples >= max_resamples) throw;
            ++sys.resamples;
            ++sys.config.seed;
        }
    }
    sys.quartet = build_quartet(sys.block);
    sys.ops = reduced_operators(sys.basis);
    return sys;
}

}  // namespace phrm
