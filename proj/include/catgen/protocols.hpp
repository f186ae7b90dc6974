#pragma once

// End-to-end scheme assemblies: plain photon subtraction, the PNRD + qubit
// ancilla variant, the on/off + displacement setup (exact and
// characteristic-function engines), and the homodyne amplification cascade.

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "catgen/analytics.hpp"
#include "catgen/errors.hpp"
#include "catgen/fock.hpp"
#include "catgen/gaussian.hpp"

namespace catgen {

enum class Engine { fock, gaussian };

inline const char* engine_name(Engine e) { return e == Engine::fock ? "fock" : "gaussian"; }

struct GenerationResult {
    Engine engine = Engine::fock;
    std::optional<FockVector> pure_state;     // set when the output is pure
    std::optional<FockOperator> density;      // exact-engine density operator
    std::optional<GaussianMixture> cf_state;  // characteristic-function output
    double success_probability = 0.0;
    double fidelity_vs_target = 0.0;
    double target_alpha = 0.0;
    cplx target_c_plus{1.0, 0.0};
    cplx target_c_minus{0.0, 0.0};
    std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// photon subtraction with a number-resolving tap (single detector)

// Projects the tapped mode onto |m>; the surviving state approximates an
// odd (m odd) or even (m even) superposition of +-alpha.
inline GenerationResult run_daokw(double r, double transmittance, int m, int dim) {
    if (m < 1) throw DomainError("run_daokw: m must be >= 1");
    SchemeParams params;
    params.r = r;
    params.transmittance = transmittance;
    params.c_plus = 1.0;
    params.c_minus = (m % 2 == 0) ? 1.0 : -1.0;
    const DecompositionCoeffs dc = decomposition_coeffs(params);

    TwoModeState joint = tensor(squeezed_vacuum(r, dim), coherent(0.0, dim));
    joint = beamsplitter(joint, transmittance);
    auto [vec, p] = project_mode(joint, 1, m);

    GenerationResult res;
    res.engine = Engine::fock;
    res.target_alpha = dc.alpha;
    res.target_c_plus = params.c_plus;
    res.target_c_minus = params.c_minus;
    const FockVector target = cat(dc.alpha, params.c_plus, params.c_minus, dim);
    res.fidelity_vs_target = std::norm(overlap(target, vec));
    res.success_probability = p;
    res.pure_state = canonical_phase(std::move(vec));
    if (joint.truncation_loss > kTruncationTol)
        res.warnings.push_back("beamsplitter truncation loss " +
                               std::to_string(joint.truncation_loss));
    return res;
}

// ---------------------------------------------------------------------------
// PNRD scheme with a one-photon qubit ancilla

enum class PnrdOutcome { herald_20, herald_02 };

inline GenerationResult run_pnrd_scheme(const SchemeParams& params, const AncillaQubit& ancilla,
                                        PnrdOutcome outcome, int dim) {
    params.validate();
    ancilla.validate();
    const DecompositionCoeffs dc = decomposition_coeffs(params);

    TwoModeState tapped = tensor(squeezed_vacuum(params.r, dim), coherent(0.0, dim));
    tapped = beamsplitter(tapped, params.transmittance);
    FockVector anc(Eigen::VectorXcd::Zero(dim));
    anc.amps[0] = ancilla.b0;
    anc.amps[1] = ancilla.b1;
    ThreeModeState joint = tensor(tapped, anc);
    const BeamsplitterUnitary half(0.5, joint.db + joint.dc - 2);
    apply_bs_bc(joint, half);

    const int nb = outcome == PnrdOutcome::herald_20 ? 2 : 0;
    const int nc = outcome == PnrdOutcome::herald_20 ? 0 : 2;
    Eigen::VectorXcd out(joint.da);
    for (int a = 0; a < joint.da; ++a) out[a] = joint.at(a, nb, nc);
    const double p = out.squaredNorm();
    if (p < kProbabilityFloor)
        throw ZeroProbabilityError("run_pnrd_scheme: heralding probability below floor");
    FockVector vec(out / std::sqrt(p));

    GenerationResult res;
    res.engine = Engine::fock;
    res.target_alpha = dc.alpha;
    res.target_c_plus = params.c_plus;
    res.target_c_minus = params.c_minus;
    const FockVector target = cat(dc.alpha, params.c_plus, params.c_minus, dim);
    res.fidelity_vs_target = std::norm(overlap(target, vec));
    res.success_probability = p;
    res.pure_state = canonical_phase(std::move(vec));
    return res;
}

// ---------------------------------------------------------------------------
// on/off scheme with displaced detection

// Both detectors conditioned "on"; det_c.displacement carries the
// displacement (set it from optimal_beta or by hand).
inline GenerationResult run_onoff_scheme(const SchemeParams& params, const DetectorModel& det_b,
                                         const DetectorModel& det_c, Engine engine, int dim) {
    params.validate();
    det_b.validate();
    det_c.validate();
    const DecompositionCoeffs dc = decomposition_coeffs(params);

    GenerationResult res;
    res.engine = engine;
    res.target_alpha = dc.alpha;
    res.target_c_plus = params.c_plus;
    res.target_c_minus = params.c_minus;

    if (engine == Engine::fock) {
        TwoModeState tapped = tensor(squeezed_vacuum(params.r, dim), coherent(0.0, dim));
        tapped = beamsplitter(tapped, params.transmittance);
        ThreeModeState joint = tensor(tapped, coherent(0.0, dim));
        const BeamsplitterUnitary half(0.5, joint.db + joint.dc - 2);
        apply_bs_bc(joint, half);
        const auto [off_b, on_b] = povm_onoff(det_b, dim);
        const auto [off_c, on_c] = povm_onoff(det_c, dim);
        auto [rho, p] = condition_on_outcome(joint, on_b, on_c);
        const FockVector target = cat(dc.alpha, params.c_plus, params.c_minus, dim);
        res.fidelity_vs_target = fidelity_pure(rho, target);
        res.success_probability = p;
        res.density = std::move(rho);
        if (joint.truncation_loss > kTruncationTol)
            res.warnings.push_back("beamsplitter truncation loss " +
                                   std::to_string(joint.truncation_loss));
    } else {
        const GaussianMixture in = input_chain_cf(params.r, params.transmittance);
        ConditionalCfResult cond = conditional_output_cf(in, det_b, det_c);
        const GaussianMixture target = cat_cf(dc.alpha, params.c_plus, params.c_minus);
        res.fidelity_vs_target = std::real(trace_pairing(cond.state, target));
        res.success_probability = cond.probability;
        res.cf_state = std::move(cond.state);
    }
    return res;
}

// ---------------------------------------------------------------------------
// conditional homodyne amplification

struct HomodyneWindow {
    double x0 = 0.0;
    double epsilon = 0.05;

    void validate() const {
        if (epsilon <= 0) throw DomainError("HomodyneWindow: epsilon must be positive");
    }
};

// Input to one amplification stage: a (possibly mixed) state together with
// its declared superposition amplitude and phase.
struct MixedCatInput {
    FockOperator rho;
    double amplitude = 0.0;
    double phase = 0.0;

    static MixedCatInput from_pure(const FockVector& v, double amplitude, double phase) {
        MixedCatInput in;
        in.rho = FockOperator(v.amps * v.amps.adjoint(), true);
        in.amplitude = amplitude;
        in.phase = phase;
        return in;
    }

    static MixedCatInput exact_cat(double amplitude, double phase, int dim) {
        return from_pure(cat(amplitude, 1.0, std::polar(1.0, phase), dim), amplitude, phase);
    }
};

// Suggested truncation for a superposition of +-alpha.
inline int cat_dim(double amplitude) {
    const double a = std::abs(amplitude);
    return std::max(24, static_cast<int>(std::ceil(a * a + 8.0 * a + 16.0)));
}

namespace detail {

inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a < 0) a += 2.0 * M_PI;
    return a;
}

// |phi| distance to pi modulo 2 pi
inline double phase_rule_defect(double phase_sum) {
    const double w = wrap_angle(phase_sum - M_PI);
    return std::min(w, 2.0 * M_PI - w);
}

inline Eigen::VectorXcd pad(const Eigen::VectorXcd& v, int dim) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim);
    out.head(v.size()) = v;
    return out;
}

} // namespace detail

// Interferes the two inputs on a balanced beamsplitter and conditions one
// output on a homodyne result inside the window.  The surviving mode
// approaches the sqrt(2)-amplified superposition with phase
// (left.phase - right.phase) as the window shrinks.
inline GenerationResult amplify_pair(const MixedCatInput& left, const MixedCatInput& right,
                                     const HomodyneWindow& window, int dim_out) {
    window.validate();
    GenerationResult res;
    res.engine = Engine::fock;

    const double defect = detail::phase_rule_defect(left.phase + right.phase);
    if (defect > 1e-9)
        res.warnings.push_back("amplify_pair: phase sum deviates from pi by " +
                               std::to_string(defect) + "; unamplified branch survives");
    if (std::abs(left.amplitude - right.amplitude) >
        1e-9 * std::max(1.0, std::abs(left.amplitude)))
        res.warnings.push_back("amplify_pair: input amplitudes differ; output amplitude is nominal");

    const int dl = left.rho.dim(), dr = right.rho.dim();
    const int dj = dl + dr - 1;
    const BeamsplitterUnitary half(0.5, 2 * dj - 2);
    const FockOperator win = quadrature_window_povm(window.x0, window.epsilon, dj);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_l(left.rho.m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_r(right.rho.m);

    // Homodyne samples slot a; feeding `right` into slot a makes the output
    // phase left.phase - right.phase.
    Eigen::MatrixXcd rho_raw = Eigen::MatrixXcd::Zero(dj, dj);
    double loss = 0.0;
    for (int k = 0; k < dl; ++k) {
        const double wl = es_l.eigenvalues()[k];
        if (wl < 1e-12) continue;
        for (int l = 0; l < dr; ++l) {
            const double wr = es_r.eigenvalues()[l];
            if (wr < 1e-12) continue;
            TwoModeState joint;
            joint.amps = detail::pad(es_r.eigenvectors().col(l), dj) *
                         detail::pad(es_l.eigenvectors().col(k), dj).transpose();
            half.apply(joint.amps, loss);
            rho_raw.noalias() += (wl * wr) * condition_unnormalized(joint, 0, win);
        }
    }
    const double p = rho_raw.trace().real();
    if (p < kProbabilityFloor)
        throw ZeroProbabilityError("amplify_pair: window acceptance probability below floor");
    rho_raw /= p;
    rho_raw = 0.5 * (rho_raw + rho_raw.adjoint().eval());

    const double amp_out = std::hypot(left.amplitude, right.amplitude);
    const double phase_out = detail::wrap_angle(left.phase - right.phase);
    const int d_keep = std::min(dim_out, dj);
    FockOperator rho(Eigen::MatrixXcd(rho_raw.topLeftCorner(d_keep, d_keep)), true);
    const double kept = rho.m.trace().real();
    if (kept < 1.0 - 1e-9)
        res.warnings.push_back("amplify_pair: output truncation kept weight " +
                               std::to_string(kept));
    rho.m /= kept;

    FockVector target = (amp_out < 1e-9)
                            ? coherent(0.0, d_keep)
                            : cat(amp_out, 1.0, std::polar(1.0, phase_out), d_keep);
    res.fidelity_vs_target = fidelity_pure(rho, target);
    res.success_probability = p;
    res.target_alpha = amp_out;
    res.target_c_plus = 1.0;
    res.target_c_minus = std::polar(1.0, phase_out);
    if (loss > kTruncationTol)
        res.warnings.push_back("amplify_pair: beamsplitter truncation loss " + std::to_string(loss));
    res.density = std::move(rho);
    return res;
}

// ---------------------------------------------------------------------------
// cascade planning and execution

// Binary amplification tree.  Children phases obey phi_1 + phi_2 = pi with
// phi_1 - phi_2 equal to the node phase; amplitudes grow by sqrt(2) per level.
struct CascadeNode {
    double phase = 0.0;
    double amplitude = 0.0;
    std::vector<CascadeNode> children; // empty or exactly two

    bool is_leaf() const { return children.empty(); }

    int depth() const {
        int d = 0;
        const CascadeNode* n = this;
        while (!n->is_leaf()) {
            ++d;
            n = &n->children.front();
        }
        return d;
    }

    int leaf_count() const {
        if (is_leaf()) return 1;
        return children[0].leaf_count() + children[1].leaf_count();
    }
};

inline CascadeNode plan_cascade(double target_amplitude, double target_phase,
                                double base_amplitude) {
    if (base_amplitude <= 0 || target_amplitude <= 0)
        throw DomainError("plan_cascade: amplitudes must be positive");
    const double ratio = target_amplitude / base_amplitude;
    const int k = static_cast<int>(std::lround(2.0 * std::log2(ratio)));
    if (k < 1 || std::abs(ratio - std::pow(2.0, k / 2.0)) > 1e-9)
        throw InfeasibleCascadeError(
            "plan_cascade: amplitude ratio " + std::to_string(ratio) +
            " is not a positive power of sqrt(2)");
    struct Builder {
        static CascadeNode build(double phase, double amplitude, int depth) {
            CascadeNode n;
            n.phase = detail::wrap_angle(phase);
            n.amplitude = amplitude;
            if (depth > 0) {
                const double child_amp = amplitude / std::sqrt(2.0);
                n.children.push_back(build(0.5 * (M_PI + phase), child_amp, depth - 1));
                n.children.push_back(build(0.5 * (M_PI - phase), child_amp, depth - 1));
            }
            return n;
        }
    };
    return Builder::build(target_phase, target_amplitude, k);
}

enum class LeafKind { exact_cat, squeezed_photon };

struct CascadeRunResult {
    GenerationResult final_result;
    std::vector<double> stage_probabilities; // index 0 = first (deepest) stage
    double total_probability = 1.0;
    int squeezed_photon_leaves = 0;
};

namespace detail {

// Squeezing that best approximates the odd superposition of +-alpha,
// found by golden-section search on the overlap.
inline double fit_squeezed_photon(double alpha, int dim) {
    const FockVector target = cat(alpha, 1.0, -1.0, dim);
    const auto score = [&](double r) {
        return std::norm(overlap(target, squeezed_single_photon(r, dim, 1.0)));
    };
    double lo = 0.01, hi = 1.2;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    for (int it = 0; it < 90; ++it) {
        if (score(c) > score(d)) hi = d;
        else lo = c;
        c = hi - gr * (hi - lo);
        d = lo + gr * (hi - lo);
    }
    return 0.5 * (lo + hi);
}

struct CascadeEval {
    MixedCatInput state;
    std::vector<double> level_probs; // products per level, leaves upward
};

inline CascadeEval eval_cascade(const CascadeNode& node, const HomodyneWindow& window,
                                LeafKind leaves, CascadeRunResult& bookkeeping) {
    if (node.is_leaf()) {
        const int dim = cat_dim(node.amplitude);
        if (leaves == LeafKind::squeezed_photon &&
            phase_rule_defect(node.phase + M_PI) < 1e-9) {
            // odd superposition: substitute the squeezed single photon
            const double r = fit_squeezed_photon(node.amplitude, dim);
            ++bookkeeping.squeezed_photon_leaves;
            return {MixedCatInput::from_pure(squeezed_single_photon(r, dim), node.amplitude,
                                             node.phase),
                    {}};
        }
        return {MixedCatInput::exact_cat(node.amplitude, node.phase, dim), {}};
    }
    CascadeEval left = eval_cascade(node.children[0], window, leaves, bookkeeping);
    CascadeEval right = eval_cascade(node.children[1], window, leaves, bookkeeping);
    GenerationResult stage =
        amplify_pair(left.state, right.state, window, cat_dim(node.amplitude));
    for (const auto& w : stage.warnings) bookkeeping.final_result.warnings.push_back(w);

    CascadeEval out;
    const size_t levels = std::max(left.level_probs.size(), right.level_probs.size());
    out.level_probs.assign(levels + 1, 1.0);
    for (size_t i = 0; i < levels; ++i) {
        if (i < left.level_probs.size()) out.level_probs[i] *= left.level_probs[i];
        if (i < right.level_probs.size()) out.level_probs[i] *= right.level_probs[i];
    }
    out.level_probs[levels] = stage.success_probability;
    out.state.rho = *stage.density;
    out.state.amplitude = node.amplitude;
    out.state.phase = node.phase;
    return out;
}

} // namespace detail

inline CascadeRunResult run_cascade(const CascadeNode& tree, const HomodyneWindow& window,
                                    LeafKind leaves = LeafKind::exact_cat) {
    if (tree.is_leaf()) throw InfeasibleCascadeError("run_cascade: tree has no amplification stage");
    CascadeRunResult res;
    detail::CascadeEval top = detail::eval_cascade(tree, window, leaves, res);
    res.stage_probabilities = top.level_probs;
    res.total_probability = 1.0;
    for (double p : res.stage_probabilities) res.total_probability *= p;

    const int dim = top.state.rho.dim();
    GenerationResult& fin = res.final_result;
    fin.engine = Engine::fock;
    fin.success_probability = res.total_probability;
    fin.target_alpha = tree.amplitude;
    fin.target_c_plus = 1.0;
    fin.target_c_minus = std::polar(1.0, tree.phase);
    const FockVector target = cat(tree.amplitude, 1.0, std::polar(1.0, tree.phase), dim);
    fin.fidelity_vs_target = fidelity_pure(top.state.rho, target);
    fin.density = std::move(top.state.rho);
    return res;
}

} // namespace catgen
