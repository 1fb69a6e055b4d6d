#include "phrm/dynamics.hpp"

#include "phrm/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace phrm {

using std::numbers::pi;

std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::unbroken: return "unbroken";
        case Regime::broken: return "broken";
        case Regime::exceptional: return "exceptional";
    }
    return "?";
}

std::string_view to_string(HamiltonianKind k) {
    return k == HamiltonianKind::A1 ? "A1" : "A2";
}

HamiltonianKind parse_hamiltonian_kind(std::string_view s) {
    if (s == "A1" || s == "a1") return HamiltonianKind::A1;
    if (s == "A2" || s == "a2") return HamiltonianKind::A2;
    throw ConfigError("hamiltonian-kind: expected A1 or A2, got '" + std::string(s) + "'");
}

Regime CouplingParams::regime() const {
    const double d = discriminant();
    const double scale = std::max({1e-300, b * b, c * c});
    if (std::abs(d) <= 1e-14 * scale) return Regime::exceptional;
    return d > 0 ? Regime::unbroken : Regime::broken;
}

void CouplingParams::validate() const {
    if (!std::isfinite(b) || !std::isfinite(c) || !std::isfinite(c1) || !std::isfinite(c2)) {
        throw ConfigError("coupling: b, c, c1, c2 must be finite");
    }
    if (b < 0) throw ConfigError("b: must be non-negative");
    if (c < 0) throw ConfigError("c: must be non-negative");
}

// --------------------------------------------------------------------------
// Generators

std::vector<cplx> closed_form_spectrum(const RealVector& x, const CouplingParams& params) {
    const cplx root_d = std::sqrt(cplx(params.discriminant()));
    std::vector<cplx> out;
    out.reserve(2 * x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const cplx shift = root_d * std::sqrt(x(k));
        out.push_back(x(k) + shift);
        out.push_back(x(k) - shift);
    }
    return out;
}

PseudoHermitianPair hamiltonian(const ReducedOperators& ops, const CouplingParams& params,
                                HamiltonianKind kind) {
    params.validate();
    PseudoHermitianPair pair;
    pair.kind = kind;
    const double b = params.b;
    const double c = params.c;
    if (kind == HamiltonianKind::A1) {
        pair.a_matrix = ops.u_hat + b * ops.r_hat + kI * c * ops.s_hat;
    } else {
        const RealVector diag = ops.u_hat.diagonal().real();
        if (!(diag.minCoeff() > 1e-10 * diag.maxCoeff())) {
            throw RankError("hamiltonian: A2 needs a nonsingular Û");
        }
        const Matrix inv_sqrt = diag.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal();
        pair.a_matrix = ops.u_hat + b * ops.t_hat * inv_sqrt - kI * c * ops.s_hat;
    }
    pair.spectrum = closed_form_spectrum(ops.x, params);
    return pair;
}

// --------------------------------------------------------------------------
// Closed-form flow

FlowSolution::FlowSolution(const CouplingParams& params, double x)
    : params_(params), x_(x), d_(params.discriminant()), sqrt_d_(std::sqrt(cplx(d_))),
      k_(0.0), regime_(params.regime()) {
    params.validate();
    if (!(x > 0) || !std::isfinite(x)) throw ArgumentError("flow: x must be positive and finite");
    if (!(params.b > 0)) {
        throw UnsupportedParameterError(
            "flow: b = 0 leaves the integration constant atanh(c/b) undefined");
    }
    const double k2 = params.c1 * params.c1 + d_;
    if (!(k2 > 0)) {
        throw UnsupportedParameterError("flow: closed form needs C1^2 + b^2 - c^2 > 0");
    }
    k_ = std::sqrt(k2);
    if (regime_ == Regime::exceptional) {
        d_ = 0.0;
        sqrt_d_ = 0.0;
    }
}

cplx FlowSolution::phase(double t) const {
    return 2.0 * std::sqrt(x_) * sqrt_d_ * (t + params_.c2);
}

double FlowSolution::real_checked(cplx v, const char* what) const {
    if (!std::isfinite(v.real()) || std::abs(v.imag()) > 1e-8 * std::max(1.0, std::abs(v.real()))) {
        throw NumericalValidityError(std::string("flow: ") + what +
                                     " is not real (imag = " + std::to_string(v.imag()) + ")");
    }
    return v.real();
}

double FlowSolution::sigma(double t) const {
    const double c1 = params_.c1;
    if (regime_ == Regime::exceptional) return 2.0 * c1 * std::sqrt(x_) * (t + params_.c2);
    return real_checked(c1 * std::sin(phase(t)) / sqrt_d_, "sigma");
}

double FlowSolution::beta(double t) const {
    return std::asinh(sigma(t)) / (2.0 * std::sqrt(x_));
}

double FlowSolution::beta_dot(double t) const {
    const double s = sigma(t);
    const double cos_phi =
        regime_ == Regime::exceptional ? 1.0 : real_checked(std::cos(phase(t)), "cos phase");
    return params_.c1 * cos_phi / std::sqrt(1.0 + s * s);
}

double FlowSolution::exp_four_alpha_x(double t) const {
    if (regime_ == Regime::exceptional) {
        throw UnsupportedParameterError("flow: alpha diverges at the exceptional point b = c");
    }
    const auto& [b, c, c1, c2] = params_;
    const cplx cos_phi = std::cos(phase(t));
    const double v = real_checked((b - c) / (b + c) * (k_ + c1 * cos_phi) / (k_ - c1 * cos_phi),
                                  "exp(4 alpha x)");
    if (!(v > 0)) throw NumericalValidityError("flow: exp(4 alpha x) is not positive");
    return v;
}

double FlowSolution::alpha(double t) const {
    return std::log(exp_four_alpha_x(t)) / (4.0 * x_);
}

double FlowSolution::alpha_dot(double t) const {
    if (regime_ == Regime::exceptional) {
        throw UnsupportedParameterError("flow: alpha diverges at the exceptional point b = c");
    }
    const double c1 = params_.c1;
    const cplx phi = phase(t);
    const cplx omega = 2.0 * std::sqrt(x_) * sqrt_d_;
    const cplx cos_phi = std::cos(phi);
    const cplx dlog = -2.0 * k_ * c1 * omega * std::sin(phi) / (k_ * k_ - c1 * c1 * cos_phi * cos_phi);
    return real_checked(dlog, "alpha_dot") / (4.0 * x_);
}

double FlowSolution::nu(double t) const {
    const double c1 = params_.c1;
    if (regime_ == Regime::exceptional) {
        const double tau = t + params_.c2;
        return c1 / (1.0 + 4.0 * x_ * c1 * c1 * tau * tau);
    }
    const cplx cos_phi = std::cos(phase(t));
    return real_checked(d_ * k_ / (k_ * k_ - c1 * c1 * cos_phi * cos_phi), "nu");
}

double FlowSolution::gamma(double t) const {
    const double tau = t + params_.c2;
    switch (regime_) {
        case Regime::exceptional:
            return 0.5 * std::atan(2.0 * params_.c1 * std::sqrt(x_) * tau);
        case Regime::broken:
            return 0.5 * real_checked(std::atan(k_ / sqrt_d_ * std::tan(phase(t))), "gamma");
        case Regime::unbroken: {
            // atan(K tan φ / √d) agrees with φ at every multiple of π/2 and
            // stays within π/2 of it in between; pick the 2π branch of the
            // atan2 value closest to φ.
            const double phi = phase(t).real();
            const double base = std::atan2(k_ * std::sin(phi), sqrt_d_.real() * std::cos(phi));
            const double turns = std::round((phi - base) / (2.0 * pi));
            return 0.5 * (base + 2.0 * pi * turns);
        }
    }
    return 0.0;
}

double FlowSolution::nu_integral(double t) const {
    return gamma(t) / std::sqrt(x_);
}

int FlowSolution::branch_count(double t) const {
    if (regime_ != Regime::unbroken) return 0;
    return static_cast<int>(std::floor(phase(t).real() / pi + 0.5));
}

double FlowSolution::gamma_infinity() const {
    switch (regime_) {
        case Regime::broken: return 0.5 * std::atan(k_ / std::sqrt(-d_));
        case Regime::exceptional: return params_.c1 >= 0 ? pi / 4 : -pi / 4;
        case Regime::unbroken: break;
    }
    throw UnsupportedParameterError("flow: gamma has no limit in the unbroken regime");
}

FlowSolution flow_closed_form(const CouplingParams& params, double x) {
    return FlowSolution(params, x);
}

std::vector<FlowSolution> flows_for(const RealVector& x, const CouplingParams& params) {
    std::vector<FlowSolution> out;
    out.reserve(static_cast<std::size_t>(x.size()));
    for (Eigen::Index k = 0; k < x.size(); ++k) out.emplace_back(params, x(k));
    return out;
}

// --------------------------------------------------------------------------
// ODE oracle

FlowInit closed_form_init(const FlowSolution& flow, double t0, HamiltonianKind kind) {
    FlowInit init;
    init.alpha0 = flow.alpha(t0);
    init.beta0 = flow.beta(t0);
    init.nu_integral0 = flow.nu_integral(t0);
    if (kind == HamiltonianKind::A2) init.alpha0 *= std::sqrt(flow.x());
    return init;
}

FlowTrajectory flow_ode_oracle(const CouplingParams& params, double x,
                               std::span<const double> t_grid, const FlowInit& init,
                               HamiltonianKind kind) {
    params.validate();
    if (!(x > 0)) throw ArgumentError("flow_ode_oracle: x must be positive");
    const double b = params.b;
    const double c = params.c;
    const double rx = std::sqrt(x);
    // Argument scale of the hyperbolic functions of the first component.
    const double scale = kind == HamiltonianKind::A1 ? x : rx;

    auto rhs = [=](double, const Eigen::Vector3d& y) {
        const double u = 2.0 * y(0) * scale;
        const double v = 2.0 * y(1) * rx;
        const double drive = b * std::cosh(u) + c * std::sinh(u);
        Eigen::Vector3d dy;
        dy(0) = -std::tanh(v) / rx * drive;
        dy(1) = b * std::sinh(u) + c * std::cosh(u);
        dy(2) = drive / std::cosh(v);
        return dy;
    };

    const Eigen::Vector3d y0(init.alpha0, init.beta0, init.nu_integral0);
    const auto result = ode::integrate(rhs, y0, t_grid);

    FlowTrajectory traj;
    traj.t.assign(t_grid.begin(), t_grid.end());
    traj.step = result.step;
    traj.richardson = result.richardson;
    for (const auto& y : result.samples) {
        traj.alpha.push_back(y(0));
        traj.beta.push_back(y(1));
        traj.nu_integral.push_back(y(2));
    }
    return traj;
}

A2FlowFinding a2_flow_discrepancy(const CouplingParams& params, double x,
                                  std::span<const double> t_grid) {
    const FlowSolution flow(params, x);
    A2FlowFinding finding;
    try {
        const auto traj = flow_ode_oracle(params, x, t_grid,
                                          closed_form_init(flow, t_grid.front(), HamiltonianKind::A2),
                                          HamiltonianKind::A2);
        for (std::size_t i = 0; i < traj.t.size(); ++i) {
            const double t = traj.t[i];
            finding.max_xi_integral_gap =
                std::max(finding.max_xi_integral_gap, std::abs(traj.nu_integral[i] - flow.nu_integral(t)));
            finding.max_delta_gap = std::max(
                finding.max_delta_gap,
                std::abs(2.0 * traj.alpha[i] * std::sqrt(x) - 2.0 * flow.alpha(t) * x));
        }
    } catch (const OracleError&) {
        finding.max_xi_integral_gap = std::numeric_limits<double>::infinity();
        finding.max_delta_gap = std::numeric_limits<double>::infinity();
    }
    return finding;
}

// --------------------------------------------------------------------------
// Dyson's formula

Matrix mode_diagonal(const RealVector& per_mode) {
    RealVector d(2 * per_mode.size());
    d << per_mode, per_mode;
    return d.cast<cplx>().asDiagonal();
}

DysonMetric dyson_metric(const ReducedOperators& ops, const CouplingParams& params, double t) {
    const int m = ops.m();
    Matrix mu = Matrix::Zero(2 * m, 2 * m);
    RealVector alpha_dot(m);
    RealVector beta_dot(m);
    for (int k = 0; k < m; ++k) {
        const FlowSolution flow(params, ops.x(k));
        const double p = flow.beta(t) * std::sqrt(ops.x(k));
        const double q = flow.alpha(t) * ops.x(k);
        const double ch = std::cosh(p);
        const double sh = std::sinh(p);
        // exp(-p σ_y) · diag(e^q, e^-q) on the (x_k, y_k) pair.
        mu(k, k) = ch * std::exp(q);
        mu(k, m + k) = kI * sh * std::exp(-q);
        mu(m + k, k) = -kI * sh * std::exp(q);
        mu(m + k, m + k) = ch * std::exp(-q);
        alpha_dot(k) = flow.alpha_dot(t);
        beta_dot(k) = flow.beta_dot(t);
    }
    DysonMetric metric;
    metric.mu_dot = -mode_diagonal(beta_dot) * ops.s_hat * mu + mode_diagonal(alpha_dot) * mu * ops.t_hat;
    metric.mu = std::move(mu);
    return metric;
}

Matrix dyson_transform(const PseudoHermitianPair& a, const Matrix& mu, const Matrix& mu_dot) {
    const Eigen::JacobiSVD<Matrix> svd(mu);
    const RealVector sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0) || sv(0) / smin > 1e12) {
        throw ConditioningError("dyson_transform: metric condition number exceeds 1e12");
    }
    const Matrix inv = mu.partialPivLu().inverse();
    return mu * a.a_matrix * inv + kI * mu_dot * inv;
}

Matrix hermitian_generator(const ReducedOperators& ops, const CouplingParams& params, double t) {
    RealVector nu(ops.m());
    for (int k = 0; k < ops.m(); ++k) nu(k) = FlowSolution(params, ops.x(k)).nu(t);
    return ops.u_hat + mode_diagonal(nu) * ops.r_hat;
}

double dyson_tolerance(const ReducedOperators& ops) {
    return 1e-8 * (1.0 + max_abs(ops.u_hat));
}

namespace {

std::vector<cplx> sorted_eigenvalues(const Matrix& m) {
    Eigen::ComplexEigenSolver<Matrix> solver(m, false);
    std::vector<cplx> ev(solver.eigenvalues().data(),
                         solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return ev;
}

}  // namespace

DensityCheckReport density_evolution_check(const PseudoHermitianPair& a,
                                           const ReducedOperators& ops,
                                           const CouplingParams& params,
                                           std::span<const double> t_grid, const Vector& psi_h0,
                                           const DensityCheckOptions& options) {
    if (a.kind != HamiltonianKind::A1) {
        throw UnsupportedParameterError("density_evolution_check: only A1 has a closed-form metric");
    }
    ode::check_grid(t_grid);
    const Vector psi = psi_h0.normalized();
    const Matrix rho_h0 = psi * psi.adjoint();
    const DysonMetric m0 = dyson_metric(ops, params, t_grid.front());
    const auto lu0 = m0.mu.partialPivLu();
    const Matrix rho_a0 = lu0.solve(rho_h0 * m0.mu);

    const Matrix& amat = a.a_matrix;
    auto rhs_a = [&](double, const Matrix& r) { return Matrix(-kI * (amat * r - r * amat)); };
    auto rhs_h = [&](double t, const Matrix& r) {
        const DysonMetric m = dyson_metric(ops, params, t);
        const Matrix mu_dot = options.zero_mu_dot ? Matrix::Zero(m.mu.rows(), m.mu.cols()) : m.mu_dot;
        const Matrix h = dyson_transform(a, m.mu, mu_dot);
        return Matrix(-kI * (h * r - r * h));
    };

    DensityCheckReport report;
    const auto evolved_a = ode::integrate(rhs_a, rho_a0, t_grid);
    const std::vector<Matrix>& rho_a = evolved_a.samples;
    // The faulty generator is not norm-preserving, so step halving need not
    // settle; it runs at the step accepted for ρ_A instead.
    const std::vector<Matrix> rho_h =
        options.zero_mu_dot && t_grid.size() > 1
            ? ode::integrate_fixed(rhs_h, rho_h0, t_grid, evolved_a.step)
            : ode::integrate(rhs_h, rho_h0, t_grid).samples;
    for (const auto& r : rho_h) {
        if (!r.allFinite()) {
            report.max_spectrum_error = report.max_matrix_error = std::numeric_limits<double>::infinity();
            return report;
        }
    }

    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const DysonMetric m = dyson_metric(ops, params, t_grid[i]);
        const Matrix mapped = m.mu * rho_a[i] * m.mu.partialPivLu().inverse();
        report.max_matrix_error = std::max(report.max_matrix_error, max_abs(mapped - rho_h[i]));
        const auto ev_a = sorted_eigenvalues(mapped);
        const auto ev_h = sorted_eigenvalues(rho_h[i]);
        for (std::size_t j = 0; j < ev_a.size(); ++j) {
            report.max_spectrum_error = std::max(report.max_spectrum_error, std::abs(ev_a[j] - ev_h[j]));
        }
    }
    report.passed = report.max_spectrum_error < options.tolerance &&
                    report.max_matrix_error < options.tolerance;
    return report;
}

std::vector<double> linspace(double start, double end, int count) {
    if (count < 1) throw ArgumentError("linspace: count must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(count));
    if (count == 1) {
        out[0] = start;
        return out;
    }
    const double step = (end - start) / (count - 1);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = start + step * i;
    out.back() = end;
    return out;
}

}  // namespace phrm
