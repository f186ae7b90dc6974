#pragma once

// Exact finite-dimensional engine: states, operators and measurements on
// truncated number bases.
//
// Conventions used throughout the library (pinned by tests/test_fock.cpp):
//   x = a + a^dag,  p = -i(a - a^dag),  vacuum covariance = identity.
//   Squeezed vacuum has positive even amplitudes and <x^2> = e^{2r}.
//   Beamsplitter B = exp[theta(a^dag b - a b^dag)], cos(theta) = sqrt(T),
//   so that B|1,0> = sqrt(T)|1,0> - sqrt(1-T)|0,1>.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "catgen/errors.hpp"

namespace catgen {

using cplx = std::complex<double>;

inline constexpr double kTruncationTol = 1e-10;
inline constexpr double kProbabilityFloor = 1e-14;

// ---------------------------------------------------------------------------
// states

struct FockVector {
    Eigen::VectorXcd amps;
    double tail_mass = 0.0;

    FockVector() = default;
    explicit FockVector(Eigen::VectorXcd a, double tail = 0.0)
        : amps(std::move(a)), tail_mass(tail) {}

    int dim() const { return static_cast<int>(amps.size()); }
    double norm() const { return amps.norm(); }

    FockVector& normalize() {
        const double n = amps.norm();
        if (n < 1e-8)
            throw DegenerateStateError("cannot normalize near-zero vector (norm=" +
                                       std::to_string(n) + ")");
        amps /= n;
        return *this;
    }
};

inline cplx overlap(const FockVector& a, const FockVector& b) {
    const int d = std::min(a.dim(), b.dim());
    return a.amps.head(d).dot(b.amps.head(d)); // conjugates the left argument
}

inline double mean_photon_number(const FockVector& v) {
    double s = 0;
    for (int n = 0; n < v.dim(); ++n) s += n * std::norm(v.amps[n]);
    return s / v.amps.squaredNorm();
}

// Fixes the global phase so the first significant amplitude is positive real.
inline FockVector canonical_phase(FockVector v, double tol = 1e-12) {
    for (int n = 0; n < v.dim(); ++n) {
        if (std::abs(v.amps[n]) > tol) {
            v.amps *= std::abs(v.amps[n]) / v.amps[n];
            break;
        }
    }
    return v;
}

inline void check_tail(const FockVector& v, double tol, const char* what) {
    if (v.tail_mass >= tol)
        throw TruncationError(std::string(what) + ": truncated weight " +
                              std::to_string(v.tail_mass) + " exceeds tolerance");
}

inline FockVector coherent(cplx alpha, int dim, double tol = kTruncationTol) {
    if (dim < 1) throw ShapeError("coherent: dim must be positive");
    Eigen::VectorXcd a(dim);
    a[0] = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < dim; ++n) a[n] = a[n - 1] * alpha / std::sqrt(double(n));
    FockVector v(std::move(a));
    v.tail_mass = std::max(0.0, 1.0 - v.amps.squaredNorm());
    check_tail(v, tol, "coherent");
    v.normalize();
    return v;
}

// c_plus |alpha> + c_minus |-alpha>, normalized.
inline FockVector cat(cplx alpha, cplx c_plus, cplx c_minus, int dim,
                      double tol = kTruncationTol) {
    if (std::norm(c_plus) + std::norm(c_minus) <= 0)
        throw DomainError("cat: both coefficients vanish");
    const FockVector plus = coherent(alpha, dim, tol);
    const FockVector minus = coherent(-alpha, dim, tol);
    FockVector v(c_plus * plus.amps + c_minus * minus.amps);
    const double raw2 = v.amps.squaredNorm();
    const double ov = std::exp(-2.0 * std::norm(alpha));
    const double exact2 = std::norm(c_plus) + std::norm(c_minus) +
                          2.0 * std::real(std::conj(c_plus) * c_minus) * ov;
    if (exact2 < 1e-16 || raw2 < 1e-16)
        throw DegenerateStateError("cat: superposition norm underflow");
    v.tail_mass = std::max(0.0, 1.0 - raw2 / exact2);
    v.normalize();
    return v;
}

// Squeezed vacuum with amps[2n] = lambda^n sqrt((2n)!)/(2^n n!sqrt(cosh r)),
// lambda = tanh(r).  Support on even n only; <x^2> = e^{2r}.
inline FockVector squeezed_vacuum(double r, int dim, double tol = kTruncationTol) {
    if (dim < 1) throw ShapeError("squeezed_vacuum: dim must be positive");
    const double lam = std::tanh(r);
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(dim);
    a[0] = 1.0 / std::sqrt(std::cosh(r));
    for (int n = 0; 2 * n + 2 < dim; ++n)
        a[2 * n + 2] = a[2 * n] * lam * std::sqrt(double(2 * n + 1) * (2 * n + 2)) /
                       (2.0 * (n + 1));
    FockVector v(std::move(a));
    v.tail_mass = std::max(0.0, 1.0 - v.amps.squaredNorm());
    check_tail(v, tol, "squeezed_vacuum");
    v.normalize();
    return v;
}

// S(r)|1>, odd support; approximates an odd cat for moderate amplitudes.
inline FockVector squeezed_single_photon(double r, int dim, double tol = kTruncationTol) {
    const FockVector sv = squeezed_vacuum(r, dim + 2, 1.0); // tail handled below
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(dim);
    const double ch = std::cosh(r), sh = std::sinh(r);
    for (int n = 0; 2 * n + 1 < dim; ++n)
        a[2 * n + 1] = ch * std::sqrt(double(2 * n + 1)) * sv.amps[2 * n] -
                       sh * std::sqrt(double(2 * n + 2)) * sv.amps[2 * n + 2];
    FockVector v(std::move(a));
    v.tail_mass = std::max(0.0, 1.0 - v.amps.squaredNorm());
    check_tail(v, tol, "squeezed_single_photon");
    v.normalize();
    return v;
}

// ---------------------------------------------------------------------------
// operators

struct FockOperator {
    Eigen::MatrixXcd m;
    bool hermitian_hint = false;

    FockOperator() = default;
    explicit FockOperator(Eigen::MatrixXcd mat, bool herm = false)
        : m(std::move(mat)), hermitian_hint(herm) {}

    int dim() const { return static_cast<int>(m.rows()); }

    static FockOperator identity(int dim) {
        return FockOperator(Eigen::MatrixXcd::Identity(dim, dim), true);
    }
};

inline double hermiticity_defect(const FockOperator& op) {
    return (op.m - op.m.adjoint()).cwiseAbs().maxCoeff();
}

inline double min_eigenvalue(const FockOperator& op) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline cplx expectation(const FockOperator& op, const FockVector& v) {
    return v.amps.dot(op.m * v.amps);
}

inline double fidelity_pure(const FockOperator& rho, const FockVector& target) {
    return std::real(expectation(rho, target));
}

// <n|D(gamma)|m> built from the first row (coherent amplitudes of |-gamma>)
// and the raising recurrence d[n+1,m] = (gamma d[n,m] + sqrt(m) d[n,m-1])/sqrt(n+1).
inline Eigen::MatrixXcd displacement_matrix(cplx gamma, int dim) {
    Eigen::MatrixXcd d(dim, dim);
    d(0, 0) = std::exp(-0.5 * std::norm(gamma));
    for (int mm = 1; mm < dim; ++mm)
        d(0, mm) = d(0, mm - 1) * (-std::conj(gamma)) / std::sqrt(double(mm));
    for (int n = 0; n + 1 < dim; ++n) {
        for (int mm = 0; mm < dim; ++mm) {
            cplx t = gamma * d(n, mm);
            if (mm > 0) t += std::sqrt(double(mm)) * d(n, mm - 1);
            d(n + 1, mm) = t / std::sqrt(double(n + 1));
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// detectors

// On/off detector: quantum efficiency eta, dark parameter nu, optional
// displacement applied in front of the detector.  always_on models the
// trivial POVM {0, I}.
struct DetectorModel {
    double eta = 1.0;
    double nu = 0.0;
    cplx displacement = 0.0;
    bool always_on = false;

    void validate() const {
        if (always_on) return;
        if (!(eta > 0.0 && eta <= 1.0))
            throw DomainError("DetectorModel: eta must lie in (0,1]");
        if (nu < 0.0) throw DomainError("DetectorModel: nu must be >= 0");
    }

    static DetectorModel ideal(cplx beta = 0.0) { return DetectorModel{1.0, 0.0, beta, false}; }
    static DetectorModel trivially_on() { return DetectorModel{1.0, 0.0, 0.0, true}; }
};

// (Pi_off, Pi_on) with Pi_off = e^{-nu} D^dag(beta) (1-eta)^n D(beta),
// Pi_on = I - Pi_off.
inline std::pair<FockOperator, FockOperator> povm_onoff(const DetectorModel& det, int dim) {
    det.validate();
    if (det.always_on)
        return {FockOperator(Eigen::MatrixXcd::Zero(dim, dim), true), FockOperator::identity(dim)};
    Eigen::VectorXd diag(dim);
    for (int n = 0; n < dim; ++n) diag[n] = std::exp(-det.nu) * std::pow(1.0 - det.eta, n);
    Eigen::MatrixXcd off;
    if (det.displacement == cplx(0.0)) {
        off = diag.cast<cplx>().asDiagonal();
    } else {
        const Eigen::MatrixXcd d = displacement_matrix(det.displacement, dim);
        off = d.adjoint() * diag.cast<cplx>().asDiagonal() * d;
        off = 0.5 * (off + off.adjoint().eval()); // symmetrize roundoff
    }
    FockOperator off_op(std::move(off), true);
    FockOperator on_op(Eigen::MatrixXcd::Identity(dim, dim) - off_op.m, true);
    return {std::move(off_op), std::move(on_op)};
}

// ---------------------------------------------------------------------------
// multimode states

struct TwoModeState {
    Eigen::MatrixXcd amps; // (n_a, n_b)
    double truncation_loss = 0.0;

    int dim_a() const { return static_cast<int>(amps.rows()); }
    int dim_b() const { return static_cast<int>(amps.cols()); }
    double norm() const { return amps.norm(); }

    TwoModeState& normalize() {
        const double n = amps.norm();
        if (n < 1e-8) throw DegenerateStateError("TwoModeState: zero norm");
        amps /= n;
        return *this;
    }
};

inline TwoModeState tensor(const FockVector& a, const FockVector& b) {
    TwoModeState s;
    s.amps = a.amps * b.amps.transpose();
    return s;
}

struct ThreeModeState {
    int da = 0, db = 0, dc = 0;
    Eigen::VectorXcd amps; // index (a*db + b)*dc + c
    double truncation_loss = 0.0;

    cplx& at(int a, int b, int c) { return amps[(a * db + b) * dc + c]; }
    cplx at(int a, int b, int c) const { return amps[(a * db + b) * dc + c]; }
    double norm() const { return amps.norm(); }
};

inline ThreeModeState tensor(const TwoModeState& ab, const FockVector& c) {
    ThreeModeState s;
    s.da = ab.dim_a();
    s.db = ab.dim_b();
    s.dc = c.dim();
    s.amps.resize(s.da * s.db * s.dc);
    for (int a = 0; a < s.da; ++a)
        for (int b = 0; b < s.db; ++b)
            for (int i = 0; i < s.dc; ++i)
                s.at(a, b, i) = ab.amps(a, b) * c.amps[i];
    s.truncation_loss = ab.truncation_loss;
    return s;
}

// ---------------------------------------------------------------------------
// beamsplitter

// Photon-number blocks of B = exp[theta(a^dag b - a b^dag)], cos(theta)=sqrt(T).
// block(n)(k', k) = <n-k', k'| B |n-k, k> with k the photon number in mode b.
// The generator restricted to total number n is a real antisymmetric
// tridiagonal matrix; a diagonal i^k similarity maps it to a real symmetric
// one, so each block comes out of one real eigendecomposition.
class BeamsplitterUnitary {
public:
    BeamsplitterUnitary(double transmittance, int max_total) : t_(transmittance) {
        if (!(transmittance > 0.0 && transmittance <= 1.0))
            throw DomainError("beamsplitter: transmittance must lie in (0,1]");
        const double theta = std::acos(std::min(1.0, std::sqrt(transmittance)));
        blocks_.reserve(max_total + 1);
        for (int n = 0; n <= max_total; ++n) {
            const int m = n + 1;
            Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(m, m);
            for (int k = 0; k + 1 <= n; ++k) {
                const double g = std::sqrt(double(k + 1) * (n - k));
                sym(k, k + 1) = -g;
                sym(k + 1, k) = -g;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
            const Eigen::MatrixXd& q = es.eigenvectors();
            const Eigen::VectorXd lam = es.eigenvalues();
            Eigen::MatrixXd cos_part = q * (theta * lam.array()).cos().matrix().asDiagonal() * q.transpose();
            Eigen::MatrixXd sin_part = q * (theta * lam.array()).sin().matrix().asDiagonal() * q.transpose();
            Eigen::MatrixXd u(m, m);
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k) {
                    switch (((j - k) % 4 + 4) % 4) {
                        case 0: u(j, k) = cos_part(j, k); break;
                        case 1: u(j, k) = sin_part(j, k); break;
                        case 2: u(j, k) = -cos_part(j, k); break;
                        default: u(j, k) = -sin_part(j, k); break;
                    }
                }
            blocks_.push_back(std::move(u));
        }
    }

    double transmittance() const { return t_; }
    int max_total() const { return static_cast<int>(blocks_.size()) - 1; }
    const Eigen::MatrixXd& block(int n) const { return blocks_[n]; }

    // Applies the rotation in place on a (d_a, d_b) amplitude matrix.
    // Blocks that stick out past either truncation lose the rotated-out
    // amplitude; the lost weight is accumulated into `loss`.
    void apply(Eigen::MatrixXcd& amps, double& loss) const {
        const int da = static_cast<int>(amps.rows());
        const int db = static_cast<int>(amps.cols());
        if (da + db - 2 > max_total())
            throw ShapeError("beamsplitter: state exceeds precomputed block range");
        for (int n = 1; n <= da + db - 2; ++n) {
            const int klo = std::max(0, n - (da - 1));
            const int khi = std::min(n, db - 1);
            const int len = khi - klo + 1;
            Eigen::VectorXcd v(len);
            for (int k = klo; k <= khi; ++k) v[k - klo] = amps(n - k, k);
            if (klo == 0 && khi == n) {
                Eigen::VectorXcd w = block(n) * v;
                for (int k = klo; k <= khi; ++k) amps(n - k, k) = w[k - klo];
            } else {
                Eigen::VectorXcd w = block(n).block(klo, klo, len, len) * v;
                loss += std::max(0.0, v.squaredNorm() - w.squaredNorm());
                for (int k = klo; k <= khi; ++k) amps(n - k, k) = w[k - klo];
            }
        }
    }
};

inline TwoModeState beamsplitter(const TwoModeState& state, double transmittance) {
    TwoModeState out = state;
    BeamsplitterUnitary bs(transmittance, state.dim_a() + state.dim_b() - 2);
    bs.apply(out.amps, out.truncation_loss);
    return out;
}

inline void apply_bs_ab(ThreeModeState& s, const BeamsplitterUnitary& bs) {
    Eigen::MatrixXcd slice(s.da, s.db);
    for (int c = 0; c < s.dc; ++c) {
        for (int a = 0; a < s.da; ++a)
            for (int b = 0; b < s.db; ++b) slice(a, b) = s.at(a, b, c);
        bs.apply(slice, s.truncation_loss);
        for (int a = 0; a < s.da; ++a)
            for (int b = 0; b < s.db; ++b) s.at(a, b, c) = slice(a, b);
    }
}

inline void apply_bs_bc(ThreeModeState& s, const BeamsplitterUnitary& bs) {
    Eigen::MatrixXcd slice(s.db, s.dc);
    for (int a = 0; a < s.da; ++a) {
        for (int b = 0; b < s.db; ++b)
            for (int c = 0; c < s.dc; ++c) slice(b, c) = s.at(a, b, c);
        bs.apply(slice, s.truncation_loss);
        for (int b = 0; b < s.db; ++b)
            for (int c = 0; c < s.dc; ++c) s.at(a, b, c) = slice(b, c);
    }
}

// ---------------------------------------------------------------------------
// conditioning

// Projects one mode of a pure two-mode state onto |m>; returns the
// normalized remaining state and the outcome probability.
inline std::pair<FockVector, double> project_mode(const TwoModeState& s, int mode, int m,
                                                  double floor = kProbabilityFloor) {
    Eigen::VectorXcd v = (mode == 1) ? Eigen::VectorXcd(s.amps.col(m))
                                     : Eigen::VectorXcd(s.amps.row(m).transpose());
    const double p = v.squaredNorm();
    if (p < floor)
        throw ZeroProbabilityError("project_mode: outcome probability " + std::to_string(p) +
                                   " below floor");
    return {FockVector(v / std::sqrt(p)), p};
}

// Unnormalized Tr_measured[(Pi on measured mode) |s><s|]; trace equals the
// outcome probability.
inline Eigen::MatrixXcd condition_unnormalized(const TwoModeState& s, int measured_mode,
                                               const FockOperator& povm) {
    Eigen::MatrixXcd a = (measured_mode == 1) ? s.amps : Eigen::MatrixXcd(s.amps.transpose());
    // rho(i,i') = sum_{j,j'} a(i,j) Pi(j',j) conj(a(i',j'))
    return a * povm.m.transpose() * a.adjoint();
}

// rho_kept = Tr_measured[(Pi on measured mode) |s><s|] / p.
inline std::pair<FockOperator, double> condition_on_outcome(const TwoModeState& s, int measured_mode,
                                                            const FockOperator& povm,
                                                            double floor = kProbabilityFloor) {
    Eigen::MatrixXcd rho = condition_unnormalized(s, measured_mode, povm);
    const double p = rho.trace().real();
    if (p < floor) throw ZeroProbabilityError("condition_on_outcome: probability below floor");
    rho /= p;
    rho = 0.5 * (rho + rho.adjoint().eval());
    return {FockOperator(std::move(rho), true), p};
}

// Simultaneous POVM elements on modes B and C of a pure three-mode state.
inline std::pair<FockOperator, double> condition_on_outcome(const ThreeModeState& s,
                                                            const FockOperator& povm_b,
                                                            const FockOperator& povm_c,
                                                            double floor = kProbabilityFloor) {
    const int da = s.da, db = s.db, dc = s.dc;
    // n(a, b', c') = sum_{b,c} amps(a,b,c) Pi_B(b',b) Pi_C(c',c)
    Eigen::MatrixXcd u1(da * db, dc); // contract C first
    for (int a = 0; a < da; ++a)
        for (int b = 0; b < db; ++b)
            u1.row(a * db + b) =
                (povm_c.m * Eigen::VectorXcd(s.amps.segment((a * db + b) * dc, dc))).transpose();
    Eigen::MatrixXcd n = Eigen::MatrixXcd::Zero(da, db * dc);
    for (int a = 0; a < da; ++a) {
        Eigen::MatrixXcd slab(db, dc);
        for (int b = 0; b < db; ++b) slab.row(b) = u1.row(a * db + b);
        Eigen::MatrixXcd res = povm_b.m * slab;
        for (int b = 0; b < db; ++b) n.block(a, b * dc, 1, dc) = res.row(b);
    }
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        m(s.amps.data(), da, db * dc);
    Eigen::MatrixXcd rho = n * m.adjoint();
    const double p = rho.trace().real();
    if (p < floor) throw ZeroProbabilityError("condition_on_outcome: probability below floor");
    rho /= p;
    rho = 0.5 * (rho + rho.adjoint().eval());
    return {FockOperator(std::move(rho), true), p};
}

// ---------------------------------------------------------------------------
// quadrature measurements

// Normalized quadrature eigenfunctions <x|n> under x = a + a^dag:
// phi_0 = (2 pi)^{-1/4} e^{-x^2/4}, phi_{n+1} = (x phi_n - sqrt(n) phi_{n-1})/sqrt(n+1).
inline Eigen::VectorXd quadrature_amplitudes(double x, int dim) {
    Eigen::VectorXd phi(dim);
    phi[0] = std::pow(2.0 * M_PI, -0.25) * std::exp(-0.25 * x * x);
    if (dim > 1) phi[1] = x * phi[0];
    for (int n = 1; n + 1 < dim; ++n)
        phi[n + 1] = (x * phi[n] - std::sqrt(double(n)) * phi[n - 1]) / std::sqrt(double(n + 1));
    return phi;
}

namespace detail {
// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}
} // namespace detail

// E = int_{x0-eps}^{x0+eps} |x><x| dx, the acceptance window of a homodyne
// measurement along x.
inline FockOperator quadrature_window_povm(double x0, double eps, int dim, int quad_points = 96) {
    if (eps <= 0) throw DomainError("quadrature_window_povm: eps must be positive");
    std::vector<double> xs, ws;
    detail::gauss_legendre(quad_points, xs, ws);
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < quad_points; ++i) {
        const Eigen::VectorXd phi = quadrature_amplitudes(x0 + eps * xs[i], dim);
        e.noalias() += (eps * ws[i]) * (phi * phi.transpose());
    }
    return FockOperator(e.cast<cplx>(), true);
}

} // namespace catgen
