#pragma once

// Characteristic-function engine.  States and POVM elements are finite
// mixtures of Gaussian forms
//     chi(omega) = weight * exp(-1/2 omega^T cov omega + i mean^T omega),
// with omega ordered (x_1, p_1, x_2, p_2, ...).  The identity operator is a
// symbolic delta term: chi_I = weight * prod_modes pi * delta^2(omega_mode).
//
// Pairing convention (fixed by the probability-closure test):
//     Tr[A B] = pi^-modes  int chi_A(omega) chi_B(-omega) d omega.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "catgen/errors.hpp"
#include "catgen/fock.hpp"

namespace catgen {

struct GaussianTerm {
    cplx weight{1.0, 0.0};
    Eigen::VectorXcd mean; // size 2*modes
    Eigen::MatrixXcd cov;  // 2*modes x 2*modes, symmetric
    bool is_delta = false; // chi = weight * prod pi delta^2(omega); mean/cov unused

    static GaussianTerm delta(int modes, cplx weight = 1.0) {
        GaussianTerm t;
        t.weight = weight;
        t.mean = Eigen::VectorXcd::Zero(2 * modes);
        t.cov = Eigen::MatrixXcd::Zero(2 * modes, 2 * modes);
        t.is_delta = true;
        return t;
    }
};

struct GaussianMixture {
    int modes = 1;
    std::vector<GaussianTerm> terms;

    bool has_delta() const {
        for (const auto& t : terms)
            if (t.is_delta) return true;
        return false;
    }

    cplx weight_sum() const {
        cplx s = 0;
        for (const auto& t : terms) s += t.weight;
        return s;
    }

    // chi(omega); only valid for delta-free mixtures.
    cplx value(const Eigen::VectorXd& omega) const {
        if (has_delta()) throw ShapeError("GaussianMixture::value: symbolic delta term present");
        cplx s = 0;
        for (const auto& t : terms) {
            const cplx quad = -0.5 * (omega.cast<cplx>().dot((t.cov * omega.cast<cplx>())));
            // VectorXcd::dot conjugates the left side; omega is real so this is plain.
            const cplx lin = cplx(0, 1) * (t.mean.transpose() * omega.cast<cplx>())(0, 0);
            s += t.weight * std::exp(quad + lin);
        }
        return s;
    }
};

// ---------------------------------------------------------------------------
// elementary states

inline GaussianMixture vacuum_cf(int modes) {
    GaussianMixture m;
    m.modes = modes;
    GaussianTerm t;
    t.weight = 1.0;
    t.mean = Eigen::VectorXcd::Zero(2 * modes);
    t.cov = Eigen::MatrixXcd::Identity(2 * modes, 2 * modes);
    m.terms.push_back(std::move(t));
    return m;
}

inline GaussianMixture squeezed_vacuum_cf(double r) {
    GaussianMixture m = vacuum_cf(1);
    m.terms[0].cov(0, 0) = std::exp(2.0 * r);
    m.terms[0].cov(1, 1) = std::exp(-2.0 * r);
    return m;
}

// chi of the dyad |g><gp|; coherent states have cov = I and the cross terms
// of a cat pick up complex weights and purely imaginary means.
inline GaussianTerm coherent_dyad_cf(cplx g, cplx gp) {
    GaussianTerm t;
    t.weight = std::exp(std::conj(gp) * g - 0.5 * (std::norm(g) + std::norm(gp)));
    t.mean = Eigen::VectorXcd(2);
    t.mean[0] = g + std::conj(gp);
    t.mean[1] = cplx(0, 1) * (std::conj(gp) - g);
    t.cov = Eigen::MatrixXcd::Identity(2, 2);
    return t;
}

// Normalized cat-state density operator (c_plus|alpha> + c_minus|-alpha>).
inline GaussianMixture cat_cf(cplx alpha, cplx c_plus, cplx c_minus) {
    const double ov = std::exp(-2.0 * std::norm(alpha));
    const double n2 = std::norm(c_plus) + std::norm(c_minus) +
                      2.0 * std::real(std::conj(c_plus) * c_minus) * ov;
    if (n2 < 1e-16) throw DegenerateStateError("cat_cf: zero-norm superposition");
    GaussianMixture m;
    m.modes = 1;
    const std::array<std::pair<cplx, cplx>, 2> comps{{{alpha, c_plus}, {-alpha, c_minus}}};
    for (const auto& [g, cg] : comps)
        for (const auto& [gp, cgp] : comps) {
            GaussianTerm t = coherent_dyad_cf(g, gp);
            t.weight *= cg * std::conj(cgp) / n2;
            m.terms.push_back(std::move(t));
        }
    return m;
}

// Tensor product (block-diagonal composition) of independent mixtures.
inline GaussianMixture tensor(const GaussianMixture& a, const GaussianMixture& b) {
    GaussianMixture out;
    out.modes = a.modes + b.modes;
    const int na = 2 * a.modes, nb = 2 * b.modes;
    for (const auto& ta : a.terms)
        for (const auto& tb : b.terms) {
            if (ta.is_delta || tb.is_delta)
                throw ShapeError("tensor: delta terms not supported here");
            GaussianTerm t;
            t.weight = ta.weight * tb.weight;
            t.mean = Eigen::VectorXcd::Zero(na + nb);
            t.mean.head(na) = ta.mean;
            t.mean.tail(nb) = tb.mean;
            t.cov = Eigen::MatrixXcd::Zero(na + nb, na + nb);
            t.cov.topLeftCorner(na, na) = ta.cov;
            t.cov.bottomRightCorner(nb, nb) = tb.cov;
            out.terms.push_back(std::move(t));
        }
    return out;
}

// ---------------------------------------------------------------------------
// symplectic maps

struct SymplecticMap {
    Eigen::MatrixXd m;

    int modes() const { return static_cast<int>(m.rows()) / 2; }

    Eigen::MatrixXd symplectic_form() const {
        const int n = modes();
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        for (int i = 0; i < n; ++i) {
            j(2 * i, 2 * i + 1) = 1;
            j(2 * i + 1, 2 * i) = -1;
        }
        return j;
    }

    double symplectic_defect() const {
        const Eigen::MatrixXd j = symplectic_form();
        return (m * j * m.transpose() - j).cwiseAbs().maxCoeff();
    }
};

// Heisenberg action of the beamsplitter on (x_i, p_i, x_j, p_j):
// z_i -> c z_i + s z_j,  z_j -> -s z_i + c z_j, c = sqrt(T).
inline SymplecticMap bs_symplectic(double transmittance, int mode_i, int mode_j, int modes) {
    if (!(transmittance > 0.0 && transmittance <= 1.0))
        throw DomainError("bs_symplectic: transmittance must lie in (0,1]");
    const double c = std::sqrt(transmittance), s = std::sqrt(1.0 - transmittance);
    SymplecticMap map;
    map.m = Eigen::MatrixXd::Identity(2 * modes, 2 * modes);
    for (int q = 0; q < 2; ++q) {
        const int i = 2 * mode_i + q, j = 2 * mode_j + q;
        map.m(i, i) = c;
        map.m(j, j) = c;
        map.m(i, j) = s;
        map.m(j, i) = -s;
    }
    return map;
}

inline GaussianMixture apply_symplectic(const SymplecticMap& map, const GaussianMixture& mix) {
    if (map.modes() != mix.modes) throw ShapeError("apply_symplectic: mode count mismatch");
    GaussianMixture out = mix;
    for (auto& t : out.terms) {
        if (t.is_delta) continue; // delta at omega=0 is invariant
        t.cov = map.m * t.cov * map.m.transpose();
        t.mean = map.m * t.mean;
    }
    return out;
}

// The two-beamsplitter chain of the photon-subtraction setup:
// BS(T) on modes (A,B), then a balanced BS on (B,C).
inline GaussianMixture apply_bs_chain(const GaussianMixture& mix, double transmittance) {
    if (mix.modes != 3) throw ShapeError("apply_bs_chain: expected a 3-mode state");
    SymplecticMap chain;
    chain.m = bs_symplectic(0.5, 1, 2, 3).m * bs_symplectic(transmittance, 0, 1, 3).m;
    return apply_symplectic(chain, mix);
}

inline GaussianMixture input_chain_cf(double r, double transmittance) {
    GaussianMixture in = tensor(tensor(squeezed_vacuum_cf(r), vacuum_cf(1)), vacuum_cf(1));
    return apply_bs_chain(in, transmittance);
}

// ---------------------------------------------------------------------------
// POVM characteristic functions

// Single Gaussian term of chi_off: weight e^-nu / eta, cov (2-eta)/eta I,
// mean at the displaced vacuum -beta.
inline GaussianTerm off_term_cf(const DetectorModel& det) {
    det.validate();
    GaussianTerm t;
    if (det.always_on) {
        t.weight = 0.0;
        t.mean = Eigen::VectorXcd::Zero(2);
        t.cov = Eigen::MatrixXcd::Identity(2, 2);
        return t;
    }
    t.weight = std::exp(-det.nu) / det.eta;
    t.cov = ((2.0 - det.eta) / det.eta) * Eigen::MatrixXcd::Identity(2, 2);
    t.mean = Eigen::VectorXcd(2);
    t.mean[0] = -2.0 * det.displacement.real();
    t.mean[1] = -2.0 * det.displacement.imag();
    return t;
}

// chi_on = chi_I - chi_off as a two-term mixture (delta + Gaussian).
inline GaussianMixture onoff_povm_cf(const DetectorModel& det) {
    GaussianMixture m;
    m.modes = 1;
    m.terms.push_back(GaussianTerm::delta(1, 1.0));
    GaussianTerm off = off_term_cf(det);
    if (off.weight != cplx(0.0)) {
        off.weight = -off.weight;
        m.terms.push_back(std::move(off));
    }
    return m;
}

// ---------------------------------------------------------------------------
// conditioning

namespace detail {

inline void check_integrable(const Eigen::MatrixXcd& m) {
    Eigen::MatrixXd re = m.real();
    Eigen::LLT<Eigen::MatrixXd> llt(re);
    if (llt.info() != Eigen::Success)
        throw IllConditionedIntegralError("gaussian integral: quadratic form not positive definite");
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0 || smax / smin > 1e12)
        throw IllConditionedIntegralError("gaussian integral: condition number exceeds 1e12");
}

// Integrates a Gaussian term against POVM off-terms on a subset of modes.
// Returns the reduced term over the kept modes.
//   kept   : indices (omega components) that survive
//   meas   : indices integrated out
//   pcov/pmean/pweight : the POVM Gaussian evaluated at -omega
inline GaussianTerm integrate_measured(const GaussianTerm& in, const std::vector<int>& kept,
                                       const std::vector<int>& meas, const Eigen::MatrixXcd& pcov,
                                       const Eigen::VectorXcd& pmean, cplx pweight) {
    const int nk = static_cast<int>(kept.size());
    const int nm = static_cast<int>(meas.size());
    Eigen::MatrixXcd a(nk, nk), c(nk, nm), b(nm, nm);
    Eigen::VectorXcd mu_a(nk), mu_m(nm);
    for (int i = 0; i < nk; ++i) {
        mu_a[i] = in.mean[kept[i]];
        for (int j = 0; j < nk; ++j) a(i, j) = in.cov(kept[i], kept[j]);
        for (int j = 0; j < nm; ++j) c(i, j) = in.cov(kept[i], meas[j]);
    }
    for (int i = 0; i < nm; ++i) {
        mu_m[i] = in.mean[meas[i]];
        for (int j = 0; j < nm; ++j) b(i, j) = in.cov(meas[i], meas[j]);
    }
    Eigen::MatrixXcd m = b + pcov;
    check_integrable(m);
    const Eigen::MatrixXcd mi = m.inverse();
    const Eigen::VectorXcd shift = mu_m - pmean;
    const cplx det = m.determinant();
    const cplx gauss = std::pow(2.0, nm / 2) / std::sqrt(det) *
                       std::exp(-0.5 * (shift.transpose() * mi * shift)(0, 0));
    GaussianTerm out;
    out.weight = in.weight * pweight * gauss;
    out.cov = a - c * mi * c.transpose();
    out.mean = mu_a - c * mi * shift;
    return out;
}

} // namespace detail

struct ConditionalCfResult {
    GaussianMixture state; // single mode (A), normalized so chi(0) = 1
    double probability = 0.0;
};

// Output characteristic function conditioned on both detectors reporting
// "on": expands (delta - chi_off,B)(delta - chi_off,C) into four groups,
// marginalizing delta factors and integrating the Gaussian ones in closed
// form.
inline ConditionalCfResult conditional_output_cf(const GaussianMixture& state,
                                                 const DetectorModel& det_b,
                                                 const DetectorModel& det_c,
                                                 double floor = kProbabilityFloor) {
    if (state.modes != 3) throw ShapeError("conditional_output_cf: expected a 3-mode state");
    const std::vector<int> idx_a{0, 1}, idx_b{2, 3}, idx_c{4, 5};
    const GaussianTerm off_b = off_term_cf(det_b);
    const GaussianTerm off_c = off_term_cf(det_c);

    GaussianMixture out;
    out.modes = 1;
    for (const auto& term : state.terms) {
        if (term.is_delta) throw ShapeError("conditional_output_cf: delta term in input state");
        // group {}: both deltas -> marginal over A
        {
            GaussianTerm t;
            t.weight = term.weight;
            t.mean = Eigen::VectorXcd(2);
            t.cov = Eigen::MatrixXcd(2, 2);
            for (int i = 0; i < 2; ++i) {
                t.mean[i] = term.mean[idx_a[i]];
                for (int j = 0; j < 2; ++j) t.cov(i, j) = term.cov(idx_a[i], idx_a[j]);
            }
            out.terms.push_back(std::move(t));
        }
        // group {C}: delta_B, gaussian C
        if (off_c.weight != cplx(0.0)) {
            GaussianTerm t = detail::integrate_measured(term, idx_a, idx_c, off_c.cov,
                                                        off_c.mean, off_c.weight);
            t.weight = -t.weight;
            out.terms.push_back(std::move(t));
        }
        // group {B}: gaussian B, delta_C
        if (off_b.weight != cplx(0.0)) {
            GaussianTerm t = detail::integrate_measured(term, idx_a, idx_b, off_b.cov,
                                                        off_b.mean, off_b.weight);
            t.weight = -t.weight;
            out.terms.push_back(std::move(t));
        }
        // group {B,C}
        if (off_b.weight != cplx(0.0) && off_c.weight != cplx(0.0)) {
            Eigen::MatrixXcd pcov = Eigen::MatrixXcd::Zero(4, 4);
            pcov.topLeftCorner(2, 2) = off_b.cov;
            pcov.bottomRightCorner(2, 2) = off_c.cov;
            Eigen::VectorXcd pmean(4);
            pmean.head(2) = off_b.mean;
            pmean.tail(2) = off_c.mean;
            std::vector<int> meas{2, 3, 4, 5};
            out.terms.push_back(detail::integrate_measured(term, idx_a, meas, pcov, pmean,
                                                           off_b.weight * off_c.weight));
        }
    }
    const double p = out.weight_sum().real();
    if (p < floor)
        throw ZeroProbabilityError("conditional_output_cf: click probability " +
                                   std::to_string(p) + " below floor");
    for (auto& t : out.terms) t.weight /= p;
    return {std::move(out), p};
}

// Probabilities of the four detector outcome patterns {on,off} x {on,off}.
// Returned in the order (on,on), (on,off), (off,on), (off,off).
inline std::array<double, 4> four_outcome_probabilities(const GaussianMixture& state,
                                                        const DetectorModel& det_b,
                                                        const DetectorModel& det_c) {
    if (state.modes != 3) throw ShapeError("four_outcome_probabilities: expected 3 modes");
    const std::vector<int> idx_a{0, 1}, idx_b{2, 3}, idx_c{4, 5};
    const GaussianTerm off_b = off_term_cf(det_b);
    const GaussianTerm off_c = off_term_cf(det_c);
    double p_off_b = 0, p_off_c = 0, p_off_bc = 0;
    // Keeping only the A block and reading the weight marginalizes A
    // (chi at omega_A = 0).
    for (const auto& term : state.terms) {
        if (off_b.weight != cplx(0.0)) {
            GaussianTerm t = detail::integrate_measured(term, idx_a, idx_b, off_b.cov,
                                                        off_b.mean, off_b.weight);
            p_off_b += t.weight.real();
        }
        if (off_c.weight != cplx(0.0)) {
            GaussianTerm t = detail::integrate_measured(term, idx_a, idx_c, off_c.cov,
                                                        off_c.mean, off_c.weight);
            p_off_c += t.weight.real();
        }
        if (off_b.weight != cplx(0.0) && off_c.weight != cplx(0.0)) {
            Eigen::MatrixXcd pcov = Eigen::MatrixXcd::Zero(4, 4);
            pcov.topLeftCorner(2, 2) = off_b.cov;
            pcov.bottomRightCorner(2, 2) = off_c.cov;
            Eigen::VectorXcd pmean(4);
            pmean.head(2) = off_b.mean;
            pmean.tail(2) = off_c.mean;
            std::vector<int> meas{2, 3, 4, 5};
            GaussianTerm t = detail::integrate_measured(term, idx_a, meas, pcov, pmean,
                                                        off_b.weight * off_c.weight);
            p_off_bc += t.weight.real();
        }
    }
    return {1.0 - p_off_b - p_off_c + p_off_bc, // on, on
            p_off_c - p_off_bc,                 // on B, off C
            p_off_b - p_off_bc,                 // off B, on C
            p_off_bc};
}

// ---------------------------------------------------------------------------
// trace pairing

// Tr[A B] = pi^-modes int chi_A(w) chi_B(-w) dw, with symbolic deltas
// collapsing to evaluations of the partner at w = 0.
inline cplx trace_pairing(const GaussianMixture& a, const GaussianMixture& b) {
    if (a.modes != b.modes) throw ShapeError("trace_pairing: mode count mismatch");
    const int modes = a.modes;
    cplx total = 0;
    for (const auto& ta : a.terms)
        for (const auto& tb : b.terms) {
            if (ta.is_delta && tb.is_delta)
                throw IllConditionedIntegralError("trace_pairing: delta paired with delta diverges");
            if (ta.is_delta) {
                total += ta.weight * tb.weight; // chi_b(0) = weight
                continue;
            }
            if (tb.is_delta) {
                total += tb.weight * ta.weight;
                continue;
            }
            Eigen::MatrixXcd sigma = ta.cov + tb.cov;
            detail::check_integrable(sigma);
            const Eigen::VectorXcd d = ta.mean - tb.mean;
            const cplx det = sigma.determinant();
            total += ta.weight * tb.weight * std::pow(2.0, modes) / std::sqrt(det) *
                     std::exp(-0.5 * (d.transpose() * sigma.inverse() * d)(0, 0));
        }
    return total;
}

} // namespace catgen
