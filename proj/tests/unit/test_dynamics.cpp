#include "phrm/dynamics.hpp"
#include "phrm/ode.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace phrm;

namespace {

const CouplingParams kUnbroken{.b = 1.2, .c = 1.0, .c1 = 2.0, .c2 = 0.0};
const CouplingParams kBroken{.b = 1.0, .c = 1.2, .c1 = 2.0, .c2 = 0.0};

std::vector<cplx> dense_eigenvalues(const Matrix& a) {
    Eigen::ComplexEigenSolver<Matrix> solver(a, false);
    return {solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size()};
}

double match(std::vector<cplx> got, const std::vector<cplx>& expected) {
    double worst = 0.0;
    for (const cplx& e : expected) {
        auto it = std::min_element(got.begin(), got.end(),
                                   [&](cplx a, cplx b) { return std::abs(a - e) < std::abs(b - e); });
        worst = std::max(worst, std::abs(*it - e));
        got.erase(it);
    }
    return worst;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("regime classification") {
    CHECK(kUnbroken.regime() == Regime::unbroken);
    CHECK(kBroken.regime() == Regime::broken);
    CHECK(CouplingParams{.b = 1.0, .c = 1.0}.regime() == Regime::exceptional);
    CHECK_THROWS_AS(CouplingParams{.b = -1.0}.validate(), ConfigError);
    CHECK_THROWS_AS(CouplingParams{.c = std::nan("")}.validate(), ConfigError);
    CHECK(parse_hamiltonian_kind("A2") == HamiltonianKind::A2);
    CHECK_THROWS_AS(parse_hamiltonian_kind("A3"), ConfigError);
}

TEST_CASE("A1 and A2 spectra for x = 4") {
    RealVector x(1);
    x << 4.0;
    const ReducedOperators ops = reduced_operators(x);
    for (auto kind : {HamiltonianKind::A1, HamiltonianKind::A2}) {
        const PseudoHermitianPair a = hamiltonian(ops, kUnbroken, kind);
        const std::vector<cplx> expected{5.32664991614216, 2.67335008385784};
        CHECK(match(dense_eigenvalues(a.a_matrix), expected) < 1e-12);
        CHECK(match(a.spectrum, expected) < 1e-12);
    }
}

TEST_CASE("spectra in both regimes match the closed form on sampled systems") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const SampledSystem sys = sample_system({8, 3, seed});
        for (const auto& params : {kUnbroken, kBroken}) {
            for (auto kind : {HamiltonianKind::A1, HamiltonianKind::A2}) {
                const PseudoHermitianPair a = hamiltonian(sys.ops, params, kind);
                CHECK(match(dense_eigenvalues(a.a_matrix), a.spectrum) < 1e-9);
            }
        }
    }
}

TEST_CASE("exceptional point and pure broken case") {
    RealVector x(1);
    x << 4.0;
    const ReducedOperators ops = reduced_operators(x);
    const auto at_ep = hamiltonian(ops, {.b = 1.0, .c = 1.0}, HamiltonianKind::A1);
    for (const cplx& e : at_ep.spectrum) CHECK(std::abs(e - cplx(4.0)) == 0.0);
    // Defective: dense eigenvalues are only good to about √eps.
    CHECK(match(dense_eigenvalues(at_ep.a_matrix), at_ep.spectrum) < 1e-6);

    const auto pure = hamiltonian(ops, {.b = 0.0, .c = 1.0}, HamiltonianKind::A1);
    const std::vector<cplx> expected{cplx(4.0, 2.0), cplx(4.0, -2.0)};
    CHECK(match(dense_eigenvalues(pure.a_matrix), expected) < 1e-12);
}

TEST_CASE("A2 needs a nonsingular U") {
    RealVector x(2);
    x << 2.0, 0.0;
    CHECK_THROWS_AS(hamiltonian(reduced_operators(x), kUnbroken, HamiltonianKind::A2), RankError);
}

TEST_CASE("closed form at the time origin") {
    const FlowSolution f(kUnbroken, 4.0);
    CHECK(f.sigma(0.0) == 0.0);
    CHECK(f.beta(0.0) == 0.0);
    CHECK(f.gamma(0.0) == 0.0);
    CHECK(f.nu(0.0) == doctest::Approx(std::sqrt(4.44)).epsilon(1e-14));
    const double k = std::sqrt(4.44);
    const double e4ax = (0.2 / 2.2) * (k + 2.0) / (k - 2.0);
    CHECK(f.exp_four_alpha_x(0.0) == doctest::Approx(e4ax).epsilon(1e-14));
    CHECK(f.exp_four_alpha_x(0.0) == doctest::Approx(3.4863).epsilon(1e-3));

    const CouplingParams shifted{.b = 1.2, .c = 1.0, .c1 = 2.0, .c2 = 0.7};
    const FlowSolution g(shifted, 4.0);
    CHECK(g.beta(-0.7) == 0.0);
    CHECK(g.gamma(-0.7) == 0.0);
}

TEST_CASE("broken-regime asymptote") {
    const double expected = 0.5 * std::atan(std::sqrt(3.56 / 0.44));
    CHECK(expected == doctest::Approx(0.61632).epsilon(1e-4));
    for (double x : {0.8, 4.0, 15.0}) {
        const FlowSolution f(kBroken, x);
        CHECK(f.gamma_infinity() == doctest::Approx(expected).epsilon(1e-14));
        CHECK(std::abs(f.gamma(30.0) - expected) < 1e-10);
    }
    CHECK_THROWS_AS(FlowSolution(kUnbroken, 1.0).gamma_infinity(), UnsupportedParameterError);
}

TEST_CASE("exceptional-point limits") {
    const CouplingParams ep{.b = 1.0, .c = 1.0, .c1 = 2.0};
    const FlowSolution f(ep, 3.0);
    CHECK(f.regime() == Regime::exceptional);
    CHECK(f.gamma(0.5) == doctest::Approx(0.5 * std::atan(2 * 2.0 * std::sqrt(3.0) * 0.5)));
    CHECK(f.nu(0.5) == doctest::Approx(2.0 / (1 + 4 * 3.0 * 4.0 * 0.25)));
    CHECK_THROWS_AS(f.alpha(0.5), UnsupportedParameterError);
    // Nearby unbroken and broken values approach the limit.
    const FlowSolution up(CouplingParams{.b = 1.0 + 1e-7, .c = 1.0, .c1 = 2.0}, 3.0);
    const FlowSolution down(CouplingParams{.b = 1.0, .c = 1.0 + 1e-7, .c1 = 2.0}, 3.0);
    CHECK(std::abs(up.gamma(0.5) - f.gamma(0.5)) < 1e-5);
    CHECK(std::abs(down.gamma(0.5) - f.gamma(0.5)) < 1e-5);
    CHECK(std::abs(up.sigma(0.5) - f.sigma(0.5)) < 1e-5);
}

TEST_CASE("unsupported parameters") {
    CHECK_THROWS_AS(FlowSolution(CouplingParams{.b = 0.0, .c = 1.0}, 1.0), UnsupportedParameterError);
    CHECK_THROWS_AS(FlowSolution(CouplingParams{.b = 1.0, .c = 3.0, .c1 = 1.0}, 1.0), UnsupportedParameterError);
    CHECK_THROWS_AS(FlowSolution(kUnbroken, 0.0), ArgumentError);
    CHECK_THROWS_AS(FlowSolution(kUnbroken, -1.0), ArgumentError);
}

TEST_CASE("closed forms satisfy the metric equations under differentiation") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ux(0.5, 10.0), ut(-3.0, 10.0), uc1(0.8, 3.0);
    for (const auto& base : {kUnbroken, kBroken}) {
        double beta_err = 0.0;
        double alpha_err = 0.0;
        for (int i = 0; i < 100; ++i) {
            CouplingParams p = base;
            p.c1 = uc1(rng);
            p.c2 = 0.3;
            const double x = ux(rng);
            const double t = ut(rng) * (base.regime() == Regime::broken ? 0.3 : 1.0);
            const FlowSolution f(p, x);
            constexpr double h = 1e-5;
            const double two_ax = 2 * f.alpha(t) * x;
            const double two_bx = 2 * f.beta(t) * std::sqrt(x);
            const double beta_fd = (f.beta(t + h) - f.beta(t - h)) / (2 * h);
            const double beta_rhs = p.b * std::sinh(two_ax) + p.c * std::cosh(two_ax);
            beta_err = std::max(beta_err, std::abs(beta_fd - beta_rhs) / std::max(1.0, std::abs(beta_rhs)));
            const double alpha_fd = (f.alpha(t + h) - f.alpha(t - h)) / (2 * h);
            const double alpha_rhs =
                -std::tanh(two_bx) / std::sqrt(x) * (p.b * std::cosh(two_ax) + p.c * std::sinh(two_ax));
            alpha_err = std::max(alpha_err, std::abs(alpha_fd - alpha_rhs) / std::max(1.0, std::abs(alpha_rhs)));
            CHECK(std::abs(f.beta_dot(t) - beta_rhs) < 1e-8 * std::max(1.0, std::abs(beta_rhs)));
            CHECK(std::abs(f.alpha_dot(t) - alpha_rhs) < 1e-8 * std::max(1.0, std::abs(alpha_rhs)));
        }
        CHECK(beta_err < 1e-6);
        CHECK(alpha_err < 1e-6);
    }
}

TEST_CASE("tanh consistency, nu definition and harmonic oscillator") {
    for (double x : {0.5, 2.0, 7.5}) {
        const FlowSolution f(kUnbroken, x);
        const FlowSolution g(kBroken, x);
        const double d = kUnbroken.discriminant();
        for (double t = 0.0; t <= 10.0; t += 0.37) {
            const double bd = f.beta_dot(t);
            const double rhs = (-1.2 * 1.0 + bd * std::sqrt(d + bd * bd)) / (1.44 + bd * bd);
            CHECK(std::abs(std::tanh(2 * f.alpha(t) * x) - rhs) < 1e-8);

            for (const FlowSolution* s : {&f, &g}) {
                const auto& p = s->params();
                const double two_ax = 2 * s->alpha(t) * x;
                const double nu_def = (p.b * std::cosh(two_ax) + p.c * std::sinh(two_ax)) /
                                      std::cosh(2 * s->beta(t) * std::sqrt(x));
                CHECK(std::abs(s->nu(t) - nu_def) < 1e-8 * std::max(1.0, nu_def));

                constexpr double h = 1e-4;
                const double acc = (s->sigma(t + h) - 2 * s->sigma(t) + s->sigma(t - h)) / (h * h);
                const double lin = 4 * x * p.discriminant() * s->sigma(t);
                CHECK(std::abs(acc + lin) / (1 + std::abs(lin)) < 1e-5);
            }
        }
    }
}

TEST_CASE("gamma is continuous, increasing when unbroken, and counts branches") {
    for (double x : {0.7, 4.0, 20.0}) {
        const FlowSolution f(kUnbroken, x);
        double nu_max = 0.0;
        double jump = 0.0;
        double prev = f.gamma(0.0);
        bool increasing = true;
        for (int i = 1; i <= 10000; ++i) {
            const double t = i * 1e-3;
            const double g = f.gamma(t);
            nu_max = std::max(nu_max, f.nu(t));
            jump = std::max(jump, std::abs(g - prev));
            increasing = increasing && g > prev;
            prev = g;
        }
        CHECK(increasing);
        CHECK(jump <= 2 * std::sqrt(x) * nu_max * 1e-3);
        // γ tracks φ/2 at every quarter period.
        const double omega = 2 * std::sqrt(x * kUnbroken.discriminant());
        for (int k = 0; k < 6; ++k) {
            const double t = k * std::numbers::pi / (2 * omega);
            CHECK(f.gamma(t) == doctest::Approx(0.5 * omega * t).epsilon(1e-12));
        }
        CHECK(f.branch_count(0.0) == 0);
        CHECK(f.branch_count(1.0 * std::numbers::pi / omega) == 1);
        CHECK(f.branch_count(3.4 * std::numbers::pi / omega) == 3);
        // γ' = √x ν.
        const double h = 1e-5;
        for (double t : {0.3, 1.7, 6.2}) {
            CHECK((f.gamma(t + h) - f.gamma(t - h)) / (2 * h) ==
                  doctest::Approx(std::sqrt(x) * f.nu(t)).epsilon(1e-7));
        }
    }
    CHECK(FlowSolution(kBroken, 2.0).branch_count(5.0) == 0);
}

TEST_CASE("ODE oracle agrees with the closed form") {
    const auto grid = linspace(0.0, 10.0, 101);
    SUBCASE("unbroken, x = 4") {
        const FlowSolution f(kUnbroken, 4.0);
        const auto traj = flow_ode_oracle(kUnbroken, 4.0, grid, closed_form_init(f, 0.0, HamiltonianKind::A1));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(std::abs(traj.beta[i] - f.beta(grid[i])) < 1e-6);
            CHECK(std::abs(traj.alpha[i] - f.alpha(grid[i])) < 1e-6);
            CHECK(std::abs(traj.nu_integral[i] - f.nu_integral(grid[i])) < 1e-6);
        }
        CHECK(traj.richardson < 1e-8);
    }
    SUBCASE("broken, beta grows monotonically") {
        const FlowSolution f(kBroken, 4.0);
        const auto traj = flow_ode_oracle(kBroken, 4.0, grid, closed_form_init(f, 0.0, HamiltonianKind::A1));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(std::abs(traj.beta[i] - f.beta(grid[i])) < 1e-6);
            CHECK(std::abs(traj.alpha[i] - f.alpha(grid[i])) < 1e-6);
            if (i) CHECK(traj.beta[i] > traj.beta[i - 1]);
        }
    }
    SUBCASE("single grid point returns the initial values") {
        const std::vector<double> one{2.5};
        const FlowInit init{0.1, 0.2, 0.3};
        const auto traj = flow_ode_oracle(kUnbroken, 4.0, one, init);
        REQUIRE(traj.alpha.size() == 1);
        CHECK(traj.alpha[0] == 0.1);
        CHECK(traj.beta[0] == 0.2);
        CHECK(traj.nu_integral[0] == 0.3);
    }
    SUBCASE("independent integrator agrees") {
        const FlowSolution f(kUnbroken, 6.0);
        const auto init = closed_form_init(f, 0.0, HamiltonianKind::A1);
        const auto ref = oracle::rk4(oracle::MetricRhs{1.2, 1.0, 6.0},
                                     Eigen::Vector3d(init.alpha0, init.beta0, init.nu_integral0), 1e-4, 100000, 1000);
        const auto traj = flow_ode_oracle(kUnbroken, 6.0, grid, init);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(std::abs(traj.alpha[i] - ref[i](0)) < 1e-7);
            CHECK(std::abs(traj.beta[i] - ref[i](1)) < 1e-7);
        }
    }
}

TEST_CASE("A2 metric flow finding") {
    const auto grid = linspace(0.0, 5.0, 51);
    // The A2 equations coincide with the A1 ones only at x = 1.
    const auto at_one = a2_flow_discrepancy(kUnbroken, 1.0, grid);
    CHECK(at_one.max_xi_integral_gap < 1e-6);
    CHECK(at_one.max_delta_gap < 1e-6);
    const auto elsewhere = a2_flow_discrepancy(kUnbroken, 4.0, grid);
    CHECK(std::isfinite(elsewhere.max_xi_integral_gap));
    CHECK(elsewhere.max_xi_integral_gap > 1e-4);
}

TEST_CASE("ODE integrator contracts") {
    auto decay = [](double, const Eigen::Matrix<double, 1, 1>& y) { return Eigen::Matrix<double, 1, 1>(-y); };
    const Eigen::Matrix<double, 1, 1> y0(1.0);
    const std::vector<double> grid{0.0, 0.5, 2.0};
    const auto res = ode::integrate(decay, y0, std::span<const double>(grid));
    CHECK(std::abs(res.samples[2](0) - std::exp(-2.0)) < 1e-9);

    const std::vector<double> bad{0.0, 0.0};
    CHECK_THROWS_AS(ode::integrate(decay, y0, std::span<const double>(bad)), ArgumentError);
    CHECK_THROWS_AS(ode::integrate(decay, y0, std::span<const double>()), ArgumentError);

    ode::Rk4Options strict;
    strict.tolerance = 1e-30;
    strict.max_halvings = 2;
    CHECK_THROWS_AS(ode::integrate(decay, y0, std::span<const double>(grid), strict), OracleError);
}

TEST_CASE("Dyson transform") {
    const SampledSystem sys = sample_system({6, 2, 1});
    const auto& ops = sys.ops;
    const PseudoHermitianPair a = hamiltonian(ops, kUnbroken, HamiltonianKind::A1);
    const double tol = dyson_tolerance(ops);

    SUBCASE("identity metric returns A") {
        const Matrix id = Matrix::Identity(4, 4);
        CHECK(max_abs(dyson_transform(a, id, Matrix::Zero(4, 4)) - a.a_matrix) == 0.0);
    }
    SUBCASE("metric is exp(-beta S) exp(alpha T)") {
        for (double t : {0.0, 0.8, 3.3}) {
            RealVector beta(2), alpha(2);
            for (int k = 0; k < 2; ++k) {
                const FlowSolution f(kUnbroken, ops.x(k));
                beta(k) = f.beta(t);
                alpha(k) = f.alpha(t);
            }
            const Matrix dense = oracle::expm(-mode_diagonal(beta) * ops.s_hat) * oracle::expm(mode_diagonal(alpha) * ops.t_hat);
            const DysonMetric m = dyson_metric(ops, kUnbroken, t);
            CHECK(max_abs(m.mu - dense) < 1e-12 * max_abs(dense));
            const double h = 1e-6;
            const Matrix fd = (dyson_metric(ops, kUnbroken, t + h).mu - dyson_metric(ops, kUnbroken, t - h).mu) / (2 * h);
            CHECK(max_abs(m.mu_dot - fd) < 1e-6 * std::max(1.0, max_abs(fd)));
        }
    }
    SUBCASE("removes the non-Hermitian part on a 50-point grid") {
        for (double t : linspace(0.0, 10.0, 50)) {
            const DysonMetric m = dyson_metric(ops, kUnbroken, t);
            const Matrix h = dyson_transform(a, m.mu, m.mu_dot);
            CHECK(max_abs(h - hermitian_generator(ops, kUnbroken, t)) < tol);
            CHECK(max_abs(h - h.adjoint()) < tol);
        }
    }
    SUBCASE("broken regime on a short window") {
        const PseudoHermitianPair ab = hamiltonian(ops, kBroken, HamiltonianKind::A1);
        for (double t : linspace(0.0, 2.0, 21)) {
            const DysonMetric m = dyson_metric(ops, kBroken, t);
            const Matrix h = dyson_transform(ab, m.mu, m.mu_dot);
            CHECK(max_abs(h - hermitian_generator(ops, kBroken, t)) < tol);
        }
    }
    SUBCASE("dropping mu_dot leaves a residual") {
        const DysonMetric m = dyson_metric(ops, kUnbroken, 1.0);
        const Matrix h = dyson_transform(a, m.mu, Matrix::Zero(4, 4));
        CHECK(max_abs(h - hermitian_generator(ops, kUnbroken, 1.0)) > 1e3 * tol);
    }
    SUBCASE("ill-conditioned metric is rejected") {
        const PseudoHermitianPair ab = hamiltonian(ops, kBroken, HamiltonianKind::A1);
        const DysonMetric m = dyson_metric(ops, kBroken, 10.0);
        CHECK_THROWS_AS(dyson_transform(ab, m.mu, m.mu_dot), ConditioningError);
    }
}

TEST_CASE("density evolution check") {
    const SampledSystem sys = sample_system({6, 2, 1});
    const auto& ops = sys.ops;
    const PseudoHermitianPair a = hamiltonian(ops, kUnbroken, HamiltonianKind::A1);
    const Vector psi = bloch_state(2, 0, BlochVector::make(1.0, 0.5));

    const std::vector<double> one{0.4};
    const auto trivial = density_evolution_check(a, ops, kUnbroken, one, psi);
    CHECK(trivial.passed);
    CHECK(trivial.max_spectrum_error < 1e-12);

    const auto grid = linspace(0.0, 5.0, 26);
    const auto good = density_evolution_check(a, ops, kUnbroken, grid, psi);
    CHECK(good.passed);
    CHECK(good.max_spectrum_error < 1e-6);

    DensityCheckOptions fault;
    fault.zero_mu_dot = true;
    CHECK_FALSE(density_evolution_check(a, ops, kUnbroken, grid, psi, fault).passed);

    const PseudoHermitianPair a2 = hamiltonian(ops, kUnbroken, HamiltonianKind::A2);
    CHECK_THROWS_AS(density_evolution_check(a2, ops, kUnbroken, grid, psi), UnsupportedParameterError);
}

TEST_CASE("linspace") {
    CHECK(linspace(2.0, 3.0, 1) == std::vector<double>{2.0});
    const auto g = linspace(0.0, 1.0, 5);
    CHECK(g.size() == 5);
    CHECK(g.back() == 1.0);
    CHECK(g[2] == 0.5);
    CHECK_THROWS_AS(linspace(0.0, 1.0, 0), ArgumentError);
}

}
