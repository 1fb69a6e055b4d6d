#include "phrm/ensemble.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace phrm {

ScalarClass parse_scalar_class(std::string_view s) {
    if (s == "complex") return ScalarClass::complex;
    if (s == "real") return ScalarClass::real;
    throw ConfigError("scalar-class: expected 'complex' or 'real', got '" + std::string(s) + "'");
}

std::string_view to_string(ScalarClass c) {
    return c == ScalarClass::complex ? "complex" : "real";
}

void EnsembleConfig::validate() const {
    if (m < 1) throw ConfigError("m: block dimension must be >= 1");
    if (n < 2 * m) throw ConfigError("n: full dimension must satisfy n >= 2m");
}

ProjectedBlock make_block(int n, const Matrix& h_block) {
    const auto m = static_cast<int>(h_block.rows());
    if (m < 1 || n < 2 * m || h_block.cols() != n - m) {
        throw ConfigError("block shape must be M x (N-M) with N >= 2M >= 2");
    }
    ProjectedBlock block;
    block.h_block = h_block;
    block.w = Matrix::Zero(n, n);
    block.w.block(0, m, m, n - m) = h_block;
    return block;
}

ProjectedBlock sample_block(const EnsembleConfig& config) {
    config.validate();
    const int rows = config.m;
    const int cols = config.n - config.m;

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Row-major fill order is part of the determinism contract.
    Matrix h(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double re = normal(rng);
            const double im = config.scalar_class == ScalarClass::complex ? normal(rng) : 0.0;
            h(i, j) = cplx(re, im);
        }
    }
    return make_block(config.n, h);
}

OperatorQuartet build_quartet(const ProjectedBlock& block) {
    const Matrix& w = block.w;
    const Matrix wd = w.adjoint();
    const Matrix wwd = w * wd;
    const Matrix wdw = wd * w;
    return OperatorQuartet{
        .r = w + wd,
        .s = -kI * (w - wd),
        .t = wwd - wdw,
        .u = wwd + wdw,
    };
}

double QuartetResiduals::max() const {
    return std::max({rs, st, tr, u_comm, casimir, hermitian, trace});
}

QuartetResiduals quartet_residuals(const OperatorQuartet& q) {
    const auto& [r, s, t, u] = q;
    QuartetResiduals res;
    res.rs = max_abs(commutator(r, s) - 2.0 * kI * t);
    res.st = max_abs(commutator(s, t) - 2.0 * kI * r * u);
    res.tr = max_abs(commutator(t, r) - 2.0 * kI * s * u);
    res.u_comm = std::max({max_abs(commutator(u, r)), max_abs(commutator(u, s)),
                           max_abs(commutator(u, t))});
    res.casimir = max_abs(r * r + s * s + t * t - 2.0 * u - u * u);
    res.hermitian = std::max({max_abs(r - r.adjoint()), max_abs(s - s.adjoint()),
                              max_abs(t - t.adjoint()), max_abs(u - u.adjoint())});
    res.trace = std::abs(r.trace()) + std::abs(s.trace()) + std::abs(t.trace());
    return res;
}

double algebra_tolerance(const OperatorQuartet& q) {
    return 1e-10 * std::max(1.0, max_abs(q.u));
}

}  // namespace phrm
