#pragma once

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "diqkd/behavior.hpp"

namespace diqkd {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;

// Validated two-qubit density operator (ordering |A B>).
class QubitPairState {
public:
    explicit QubitPairState(const Mat4& rho);
    static QubitPairState pure(const Vec4& psi);

    const Mat4& density() const { return rho_; }
    // Ascending eigenvalues and matching eigenvectors (columns).
    const Eigen::Vector4d& eigenvalues() const { return evals_; }
    const Mat4& eigenvectors() const { return evecs_; }
    double purity() const;

private:
    Mat4 rho_;
    Eigen::Vector4d evals_;
    Mat4 evecs_;
};

// Dichotomic observable cos(t) sz + sin(t) sx; outcome 0 is the +1 eigenspace.
struct Measurement {
    double theta = 0.0;

    Measurement() = default;
    explicit Measurement(double t);
    std::array<Mat2, 2> projectors() const;
    Mat2 observable() const;
};

Mat2 pauli_x();
Mat2 pauli_z();

QubitPairState werner_state(double p);
QubitPairState tilted_state(double theta);
// Wootters concurrence.
double concurrence(const QubitPairState& s);

Behavior born_behavior(const QubitPairState& s, const std::vector<Measurement>& alice,
                       const std::vector<Measurement>& bob);

// ||(M+ - B0)psi||^2 + ||(M- - B1)psi||^2 with M+- = (A0 +- A1)/sqrt2, averaged
// over the eigen-decomposition for mixed states.
double sos_residual(const QubitPairState& s, const std::vector<Measurement>& alice,
                    const std::vector<Measurement>& bob);

std::vector<Measurement> chsh_alice_angles();
std::vector<Measurement> chsh_bob_angles();

}  // namespace diqkd
