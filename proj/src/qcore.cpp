#include "diqkd/qcore.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace diqkd {

namespace {

constexpr double kHermTol = 1e-12;
constexpr double kTraceTol = 1e-12;
constexpr double kPsdTol = 1e-10;

Mat4 kron(const Mat2& a, const Mat2& b)
{
    Mat4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

}  // namespace

QubitPairState::QubitPairState(const Mat4& rho) : rho_(rho)
{
    if (!rho.allFinite()) throw DomainError("state: non-finite density entries");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kHermTol) throw DomainError("state: density is not Hermitian");
    if (std::abs(rho.trace() - cplx(1.0, 0.0)) > kTraceTol) throw DomainError("state: trace differs from 1");
    Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (rho + rho.adjoint()));
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
    if (evals_.minCoeff() < -kPsdTol) throw DomainError("state: density has a negative eigenvalue");
}

QubitPairState QubitPairState::pure(const Vec4& psi)
{
    double n = psi.norm();
    if (!(n > 0.0)) throw DomainError("state: zero vector");
    Vec4 u = psi / n;
    Mat4 rho = u * u.adjoint();
    return QubitPairState(0.5 * (rho + rho.adjoint()));
}

double QubitPairState::purity() const { return (rho_ * rho_).trace().real(); }

Measurement::Measurement(double t)
{
    const double two_pi = 2.0 * std::numbers::pi;
    theta = std::fmod(t, two_pi);
    if (theta < 0.0) theta += two_pi;
}

Mat2 pauli_x()
{
    Mat2 m;
    m << 0, 1, 1, 0;
    return m;
}

Mat2 pauli_z()
{
    Mat2 m;
    m << 1, 0, 0, -1;
    return m;
}

Mat2 Measurement::observable() const { return std::cos(theta) * pauli_z() + std::sin(theta) * pauli_x(); }

std::array<Mat2, 2> Measurement::projectors() const
{
    Mat2 o = observable();
    Mat2 id = Mat2::Identity();
    return {0.5 * (id + o), 0.5 * (id - o)};
}

QubitPairState werner_state(double p)
{
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("werner_state: p outside [0,1]");
    Vec4 phi(1.0 / std::numbers::sqrt2, 0, 0, 1.0 / std::numbers::sqrt2);
    Mat4 rho = p * (phi * phi.adjoint()) + (1.0 - p) / 4.0 * Mat4::Identity();
    return QubitPairState(rho);
}

QubitPairState tilted_state(double theta)
{
    return QubitPairState::pure(Vec4(std::cos(theta), 0, 0, std::sin(theta)));
}

double concurrence(const QubitPairState& s)
{
    Mat2 sy;
    sy << 0, cplx(0, -1), cplx(0, 1), 0;
    Mat4 yy = kron(sy, sy);
    Mat4 tilde = yy * s.density().conjugate() * yy;
    Eigen::ComplexEigenSolver<Mat4> es(s.density() * tilde);
    std::array<double, 4> l{};
    for (int i = 0; i < 4; ++i) l[i] = std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
    std::sort(l.begin(), l.end(), std::greater<>());
    return std::max(0.0, l[0] - l[1] - l[2] - l[3]);
}

Behavior born_behavior(const QubitPairState& s, const std::vector<Measurement>& alice,
                       const std::vector<Measurement>& bob)
{
    if (alice.empty() || bob.empty()) throw DomainError("born_behavior: empty measurement list");
    Behavior out(2, 2, static_cast<int>(alice.size()), static_cast<int>(bob.size()));
    std::vector<std::array<Mat2, 2>> pa, pb;
    for (const auto& m : alice) pa.push_back(m.projectors());
    for (const auto& m : bob) pb.push_back(m.projectors());
    const Mat4& rho = s.density();
    for (int x = 0; x < out.nX; ++x)
        for (int y = 0; y < out.nY; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    double v = (kron(pa[x][a], pb[y][b]) * rho).trace().real();
                    out(a, b, x, y) = v < 0.0 && v > -1e-15 ? 0.0 : v;
                }
    return out;
}

double sos_residual(const QubitPairState& s, const std::vector<Measurement>& alice,
                    const std::vector<Measurement>& bob)
{
    if (alice.size() != 2 || bob.size() != 2) throw DomainError("sos_residual: need two measurements per party");
    const Mat2 id = Mat2::Identity();
    Mat4 A0 = kron(alice[0].observable(), id), A1 = kron(alice[1].observable(), id);
    Mat4 B0 = kron(id, bob[0].observable()), B1 = kron(id, bob[1].observable());
    Mat4 Mp = (A0 + A1) / std::numbers::sqrt2, Mm = (A0 - A1) / std::numbers::sqrt2;
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
        double w = s.eigenvalues()[k];
        if (w <= 1e-14) continue;
        Vec4 psi = s.eigenvectors().col(k);
        total += w * ((Mp - B0) * psi).squaredNorm() + w * ((Mm - B1) * psi).squaredNorm();
    }
    return total;
}

std::vector<Measurement> chsh_alice_angles()
{
    return {Measurement(0.0), Measurement(std::numbers::pi / 2)};
}

std::vector<Measurement> chsh_bob_angles()
{
    return {Measurement(std::numbers::pi / 4), Measurement(-std::numbers::pi / 4)};
}

}  // namespace diqkd
