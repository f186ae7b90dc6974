#pragma once

// Closed-form expressions for the photon-subtraction scheme: decomposition
// coefficients, quasi-coherent states, overlap fidelity, heralding weights
// and the optimal displacement.  Every formula here has a brute-force twin
// test against the exact engine.

#include <cmath>
#include <complex>
#include <string>

#include "catgen/errors.hpp"
#include "catgen/fock.hpp"

namespace catgen {

struct SchemeParams {
    double r = 0.3;            // squeezing, lambda = tanh(r)
    double transmittance = 0.95;
    cplx beta = 0.0;           // displacement in front of detector C
    cplx c_plus{1.0, 0.0};
    cplx c_minus{0.0, 0.0};

    double lambda() const { return std::tanh(r); }
    double lambda_t() const { return lambda() * transmittance; }

    void validate() const {
        if (r < 0) throw DomainError("SchemeParams: r must be >= 0");
        if (!(transmittance > 0.0 && transmittance <= 1.0))
            throw DomainError("SchemeParams: transmittance must lie in (0,1]");
        if (std::norm(c_plus) + std::norm(c_minus) <= 0)
            throw DomainError("SchemeParams: target coefficients both zero");
        if (lambda_t() >= 1.0) throw DomainError("SchemeParams: lambda*T must be < 1");
    }
};

struct DecompositionCoeffs {
    double c1 = 0;
    double c2 = 0;
    double alpha = 0; // quasi-coherent amplitude
};

inline DecompositionCoeffs decomposition_coeffs(const SchemeParams& params) {
    params.validate();
    const double s = params.lambda_t();
    if (s <= 0.0)
        throw DomainError("decomposition_coeffs: degenerate at lambda*T = 0 (c1 vanishes)");
    DecompositionCoeffs c;
    c.c1 = std::sqrt(3.0 * s / ((1.0 + s) * (1.0 + 2.0 * s)));
    c.c2 = std::sqrt((1.0 + 2.0 * s * s) / ((1.0 + s) * (1.0 + 2.0 * s)));
    c.alpha = std::sqrt(3.0 * s / (1.0 - s * s));
    return c;
}

// The quasi-coherent states phi_{+-} = c2 Psi_2 +- c1 Psi_1 in closed form.
// Even branch carries sqrt(1 - s^2), odd branch sqrt(3 s / (2n+1)); with the
// common prefactor this is exactly normalized.
inline FockVector phi_pm_state(const SchemeParams& params, int sign, int dim,
                               double tol = kTruncationTol) {
    params.validate();
    const double s = params.lambda_t();
    if (s <= 0.0) throw DomainError("phi_pm_state: requires lambda*T > 0");
    const double pref = std::pow(1.0 - s * s, 0.75) /
                        (2.0 * std::sqrt((1.0 + s) * (1.0 + 2.0 * s)));
    const double sgn = sign >= 0 ? 1.0 : -1.0;
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(dim);
    // g_n = (2n+2)!/(n+1)! (s/2)^n / sqrt((2n)!)
    double g = 2.0;
    for (int n = 0; 2 * n < dim; ++n) {
        a[2 * n] = pref * g * std::sqrt(1.0 - s * s);
        if (2 * n + 1 < dim) a[2 * n + 1] = sgn * pref * g * std::sqrt(3.0 * s / (2 * n + 1));
        g *= (2.0 * n + 4.0) * (2.0 * n + 3.0) / (n + 2.0) * (0.5 * s) /
             std::sqrt((2.0 * n + 1.0) * (2.0 * n + 2.0));
    }
    FockVector v(std::move(a));
    v.tail_mass = std::max(0.0, 1.0 - v.amps.squaredNorm());
    check_tail(v, tol, "phi_pm_state");
    v.normalize();
    return v;
}

// F = |<alpha|phi_+>|^2 in closed form.
inline double fidelity_closed_form(const SchemeParams& params) {
    const double s = params.lambda_t();
    return std::sqrt(1.0 - s * s) * (1.0 + s) * (1.0 + 2.0 * s) *
           std::exp(-3.0 * s / (1.0 + s));
}

// Probability of finding m photons in the tapped mode.
inline double p_m(const SchemeParams& params, int m) {
    if (m < 0) throw DomainError("p_m: m must be >= 0");
    const double lam = params.lambda();
    const double t = params.transmittance;
    const double s = lam * t;
    const double pref = std::sqrt((1.0 - lam * lam) / (1.0 - s * s));
    if (m == 0) return pref;
    const double base = lam * lam * t * t * (1.0 - t) / (t * (1.0 - s * s));
    if (base == 0.0) return 0.0;
    double sum = 0.0;
    for (int k = 0; 2 * k <= m; ++k) {
        double term = 1.0;
        // m! / ((m-2k)! (k!)^2 (2s)^{2k})
        for (int i = m - 2 * k + 1; i <= m; ++i) term *= i;
        for (int i = 1; i <= k; ++i) term /= double(i) * i;
        term /= std::pow(2.0 * s, 2 * k);
        sum += term;
    }
    return pref * std::pow(base, m) * sum;
}

struct OptimalBeta {
    cplx beta{0.0};
    double validity = 0.0; // |beta|^2 against the smallness condition
    std::string warning;   // non-empty when the ansatz degrades
};

// beta = (c+ - c-)/(c+ + c-) sqrt(3 lambda (1-T) / (2 (1 - lambda^2 T^2))).
// Valid while |beta|^2 << 1; degenerates as c+ + c- -> 0.
inline OptimalBeta optimal_beta(const SchemeParams& params) {
    params.validate();
    const cplx sum = params.c_plus + params.c_minus;
    const cplx diff = params.c_plus - params.c_minus;
    const double scale = std::abs(params.c_plus) + std::abs(params.c_minus);
    if (std::abs(sum) < 1e-10 * scale)
        throw SingularTargetError("optimal_beta: c_plus + c_minus vanishes");
    const double lam = params.lambda();
    const double s = params.lambda_t();
    OptimalBeta out;
    out.beta = diff / sum *
               std::sqrt(3.0 * lam * (1.0 - params.transmittance) / (2.0 * (1.0 - s * s)));
    out.validity = std::norm(out.beta);
    if (std::abs(sum) < 1e-3 * scale)
        out.warning = "optimal_beta: c_plus + c_minus nearly singular; displacement ansatz degrades";
    else if (out.validity > 0.1)
        out.warning = "optimal_beta: |beta|^2 = " + std::to_string(out.validity) +
                      " strains the small-displacement condition";
    return out;
}

struct AncillaQubit {
    cplx b0{1.0, 0.0};
    cplx b1{0.0, 0.0};

    void validate() const {
        if (std::abs(std::norm(b0) + std::norm(b1) - 1.0) > 1e-12)
            throw DomainError("AncillaQubit: not normalized");
    }
};

namespace detail {

// Heralded amplitudes of the qubit-ancilla scheme for outcome (2,0):
// u_m = <2,0| B_1/2 |m>_B (x) |j>_C with the only photon-conserving entries
// u(m=1,j=1) and u(m=2,j=0), plus the conditioning signs of the tapped
// states relative to their canonical phase.
struct PnrdGeometry {
    double u11 = 0, u20 = 0;
    double sigma1 = 1, sigma2 = 1;
};

inline PnrdGeometry pnrd_geometry(const SchemeParams& params) {
    constexpr int d = 6;
    const BeamsplitterUnitary half(0.5, 2 * d);
    // u11: total photons 2, input (b,c) = (1,1) -> k=1; output (2,0) -> k=0
    PnrdGeometry g;
    g.u11 = half.block(2)(0, 1);
    g.u20 = half.block(2)(0, 0);
    // conditioning signs from a small tapped-state computation
    const int dd = 24;
    TwoModeState joint = tensor(squeezed_vacuum(params.r, dd), coherent(0.0, dd));
    joint = beamsplitter(joint, params.transmittance);
    for (int m : {1, 2}) {
        auto [vec, p] = project_mode(joint, 1, m);
        const FockVector canon = canonical_phase(vec);
        int idx = 0;
        while (std::abs(canon.amps[idx]) < 1e-12) ++idx;
        const double sgn = std::real(vec.amps[idx] / canon.amps[idx]);
        (m == 1 ? g.sigma1 : g.sigma2) = sgn >= 0 ? 1.0 : -1.0;
    }
    return g;
}

} // namespace detail

// Ancilla (b0, b1) such that heralding outcome (2,0) produces the target
// combination (c+ - c-) c1 |Psi_1> + (c+ + c-) c2 |Psi_2>.
inline AncillaQubit qubit_ancilla_coeffs(const SchemeParams& params) {
    params.validate();
    const cplx sum = params.c_plus + params.c_minus;
    const cplx diff = params.c_plus - params.c_minus;
    const double scale = std::abs(params.c_plus) + std::abs(params.c_minus);
    if (std::abs(sum) < 1e-10 * scale && std::abs(diff) < 1e-10 * scale)
        throw SingularTargetError("qubit_ancilla_coeffs: degenerate target");
    const DecompositionCoeffs dc = decomposition_coeffs(params);
    const double p1 = p_m(params, 1);
    const double p2 = p_m(params, 2);
    if (p1 <= 0 || p2 <= 0)
        throw ZeroProbabilityError("qubit_ancilla_coeffs: no tapped photons at T = 1");
    const detail::PnrdGeometry geom = detail::pnrd_geometry(params);
    AncillaQubit q;
    q.b1 = diff * dc.c1 / (geom.sigma1 * std::sqrt(p1) * geom.u11);
    q.b0 = sum * dc.c2 / (geom.sigma2 * std::sqrt(p2) * geom.u20);
    const double n = std::sqrt(std::norm(q.b0) + std::norm(q.b1));
    q.b0 /= n;
    q.b1 /= n;
    return q;
}

} // namespace catgen
