// ensemble.hpp: seeded sampling of the projected Gaussian block W = PHQ and the
// operator quartet R, S, T, U built from it.
#pragma once

#include "phrm/types.hpp"

#include <cstdint>
#include <string_view>

namespace phrm {

enum class ScalarClass { complex, real };

ScalarClass parse_scalar_class(std::string_view s);
std::string_view to_string(ScalarClass c);

struct EnsembleConfig {
    int n = 6;  // full dimension N
    int m = 2;  // block dimension M
    std::uint64_t seed = 1;
    ScalarClass scalar_class = ScalarClass::complex;

    // Throws ConfigError unless n >= 2m >= 2.
    void validate() const;
};

struct ProjectedBlock {
    Matrix w;        // N x N, nonzero only in rows [0, M), columns [M, N)
    Matrix h_block;  // M x (N - M)

    int n() const { return static_cast<int>(w.rows()); }
    int m() const { return static_cast<int>(h_block.rows()); }
};

struct OperatorQuartet {
    Matrix r;  // W + W†
    Matrix s;  // -i (W - W†)
    Matrix t;  // WW† - W†W
    Matrix u;  // WW† + W†W
};

// Entries of the sampled block are independent standard normals; for the
// complex class the real and imaginary parts are independent N(0, 1), so
// E|h|^2 = 2. Identical configs give bitwise-identical blocks.
ProjectedBlock sample_block(const EnsembleConfig& config);

// Wraps an explicit M x (N-M) block. Used by tests and by callers that bring
// their own H.
ProjectedBlock make_block(int n, const Matrix& h_block);

OperatorQuartet build_quartet(const ProjectedBlock& block);

// Residuals of the quartet identities, all in max-entry norm.
struct QuartetResiduals {
    double rs = 0;       // [R,S] - 2iT
    double st = 0;       // [S,T] - 2iRU
    double tr = 0;       // [T,R] - 2iSU
    double u_comm = 0;   // max over [U,R], [U,S], [U,T]
    double casimir = 0;  // R² + S² + T² - 2U - U²
    double hermitian = 0;
    double trace = 0;    // |tr R| + |tr S| + |tr T|

    double max() const;
};

QuartetResiduals quartet_residuals(const OperatorQuartet& q);

// 1e-10 * max(1, ||U||_max)
double algebra_tolerance(const OperatorQuartet& q);

}  // namespace phrm
