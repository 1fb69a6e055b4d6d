#include "phrm/entanglement.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace phrm {

std::string_view to_string(Generator g) {
    return g == Generator::R ? "R" : "T";
}

Generator generator_for(HamiltonianKind kind) {
    return kind == HamiltonianKind::A1 ? Generator::R : Generator::T;
}

BellPair BellPair::make(int m_index, int n_index, Generator generator, int modes) {
    if (m_index < 1 || m_index > modes || n_index < 1 || n_index > modes) {
        throw ArgumentError("bell pair: mode indices must lie in 1.." + std::to_string(modes));
    }
    if (m_index == n_index) throw ArgumentError("bell pair: mode indices must differ");
    BellPair pair;
    pair.m_index = m_index;
    pair.n_index = n_index;
    pair.generator = generator;
    const double r = std::numbers::sqrt2 / 2;
    pair.phi_plus = Vector4(r, 0, 0, r);
    pair.phi_minus = Vector4(r, 0, 0, -r);
    return pair;
}

Vector qubit_vector(Generator generator, int modes, int k, int level) {
    if (k < 0 || k >= modes) throw ArgumentError("qubit_vector: mode index out of range");
    if (level != 0 && level != 1) throw ArgumentError("qubit_vector: level must be 0 or 1");
    Vector v = Vector::Zero(2 * modes);
    if (generator == Generator::T) {
        v(level == 0 ? k : modes + k) = 1.0;
    } else {
        const double r = std::numbers::sqrt2 / 2;
        v(k) = r;
        v(modes + k) = level == 0 ? r : -r;
    }
    return v;
}

EvolvedState initial_state(double theta, const BellPair& pair) {
    EvolvedState state;
    state.pair = pair;
    state.theta = theta;
    state.chi = std::cos(theta / 2) * pair.phi_plus + std::sin(theta / 2) * pair.phi_minus;
    return state;
}

Vector4 evolve_chi(Generator generator, double theta, double gamma_m, double gamma_n) {
    const double c = std::cos(theta / 2);
    const double s = std::sin(theta / 2);
    const double r = std::numbers::sqrt2 / 2;
    if (generator == Generator::R) {
        const double delta = gamma_m + gamma_n;
        const cplx a = c * std::cos(delta) - kI * s * std::sin(delta);
        const cplx b = s * std::cos(delta) - kI * c * std::sin(delta);
        return a * Vector4(r, 0, 0, r) + b * Vector4(r, 0, 0, -r);
    }
    // Each qubit picks up e^{∓iγ} on levels 0/1.
    const Vector4 chi0 = c * Vector4(r, 0, 0, r) + s * Vector4(r, 0, 0, -r);
    Vector4 chi;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            const double sa = a == 0 ? 1.0 : -1.0;
            const double sb = b == 0 ? 1.0 : -1.0;
            chi(2 * a + b) = std::exp(-kI * (sa * gamma_m + sb * gamma_n)) * chi0(2 * a + b);
        }
    }
    return chi;
}

EvolvedState evolve(const EvolvedState& state, std::span<const FlowSolution> flows, double t) {
    const auto modes = static_cast<int>(flows.size());
    const int mi = state.pair.m_index;
    const int ni = state.pair.n_index;
    if (mi < 1 || mi > modes || ni < 1 || ni > modes) {
        throw ArgumentError("evolve: mode index out of range for " + std::to_string(modes) + " modes");
    }
    const double gm = flows[static_cast<std::size_t>(mi - 1)].gamma(t);
    const double gn = flows[static_cast<std::size_t>(ni - 1)].gamma(t);
    EvolvedState out = state;
    out.t = t;
    out.delta = gm + gn;
    out.chi = evolve_chi(state.pair.generator, state.theta, gm, gn);
    return out;
}

ReducedDensity partial_trace(const Vector4& chi) {
    ReducedDensity out;
    for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 2; ++k) {
            cplx acc = 0.0;
            for (int l = 0; l < 2; ++l) acc += chi(2 * i + l) * std::conj(chi(2 * k + l));
            out.rho(i, k) = acc;
        }
    }
    const Eigen::SelfAdjointEigenSolver<Matrix2> solver(out.rho);
    const double lo = solver.eigenvalues()(0);
    const double hi = solver.eigenvalues()(1);
    const bool first_larger = out.rho(0, 0).real() >= out.rho(1, 1).real();
    out.lambda1 = first_larger ? hi : lo;
    out.lambda2 = first_larger ? lo : hi;
    return out;
}

ReducedDensity closed_form_reduced_density(double theta, double delta) {
    const double p = std::sin(theta) * std::cos(2.0 * delta);
    ReducedDensity out;
    out.lambda1 = 0.5 * (1.0 + p);
    out.lambda2 = 0.5 * (1.0 - p);
    out.rho = Matrix2::Zero();
    out.rho(0, 0) = out.lambda1;
    out.rho(1, 1) = out.lambda2;
    return out;
}

double von_neumann(double lambda1, double lambda2) {
    constexpr double tol = 1e-12;
    double s = 0.0;
    for (double l : {lambda1, lambda2}) {
        if (!(l >= -tol && l <= 1.0 + tol)) {
            throw NumericalValidityError("von_neumann: eigenvalue " + std::to_string(l) +
                                         " outside [0, 1]");
        }
        l = std::clamp(l, 0.0, 1.0);
        if (l > 0.0) s -= l * std::log(l);
    }
    return s;
}

double von_neumann(const ReducedDensity& rho) {
    return von_neumann(rho.lambda1, rho.lambda2);
}

Vector4 brute_force_evolve(const ReducedOperators& ops, const BellPair& pair, double theta,
                           double gamma_m, double gamma_n) {
    const int modes = ops.m();
    const RealVector diag = ops.u_hat.diagonal().real();
    const Matrix generator =
        pair.generator == Generator::R
            ? Matrix(diag.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() * ops.r_hat)
            : Matrix(diag.cwiseInverse().cast<cplx>().asDiagonal() * ops.t_hat);

    auto qubit_block = [&](int k) {
        Matrix2 g;
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                g(a, b) = qubit_vector(pair.generator, modes, k, a).dot(
                    generator * qubit_vector(pair.generator, modes, k, b));
            }
        }
        return g;
    };
    const Matrix2 gm = qubit_block(pair.m_index - 1);
    const Matrix2 gn = qubit_block(pair.n_index - 1);
    const Matrix2 id = Matrix2::Identity();
    const Matrix4 two_qubit = gamma_m * Matrix4(Eigen::kroneckerProduct(gm, id)) +
                              gamma_n * Matrix4(Eigen::kroneckerProduct(id, gn));
    const Matrix4 propagator = Matrix4((-kI * two_qubit).exp());
    return propagator * initial_state(theta, pair).chi;
}

double bell_delta(std::span<const FlowSolution> flows, const BellPair& pair, double t) {
    const auto modes = static_cast<int>(flows.size());
    if (pair.m_index > modes || pair.n_index > modes) {
        throw ArgumentError("bell_delta: mode index out of range");
    }
    return flows[static_cast<std::size_t>(pair.m_index - 1)].gamma(t) +
           flows[static_cast<std::size_t>(pair.n_index - 1)].gamma(t);
}

EntropyTrace entropy_trace(std::span<const FlowSolution> flows, const BellPair& pair, double theta,
                           std::span<const double> t_grid) {
    EntropyTrace trace;
    trace.records.reserve(t_grid.size());
    for (double t : t_grid) {
        const double delta = bell_delta(flows, pair, t);
        const ReducedDensity rho = closed_form_reduced_density(theta, delta);
        trace.records.push_back({t, delta, rho.lambda1, rho.lambda2, von_neumann(rho)});
    }
    return trace;
}

EntropyTrace entropy_trace(const ReducedOperators& ops, const CouplingParams& params,
                           const BellPair& pair, double theta, std::span<const double> t_grid) {
    const auto flows = flows_for(ops.x, params);
    return entropy_trace(flows, pair, theta, t_grid);
}

Vector2 single_state_evolve(HamiltonianKind kind, const BlochVector& bloch, double gamma, double x,
                            double t) {
    const Vector2 psi(std::cos(bloch.theta / 2),
                      std::exp(kI * bloch.phi) * std::sin(bloch.theta / 2));
    const cplx global = std::exp(-kI * x * t);
    Matrix2 u;
    if (kind == HamiltonianKind::A1) {
        u << std::cos(gamma), -kI * std::sin(gamma), -kI * std::sin(gamma), std::cos(gamma);
    } else {
        u << std::exp(-kI * gamma), 0.0, 0.0, std::exp(kI * gamma);
    }
    return global * (u * psi);
}

Vector2 single_state_rotation(const BlochVector& bloch, double gamma, double x, double t) {
    const cplx global = std::exp(-kI * x * t);
    const double a = bloch.theta / 2 - gamma;
    return global * Vector2(std::cos(a), std::exp(kI * bloch.phi) * std::sin(a));
}

}  // namespace phrm
