#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "asel/net.hpp"

// Closed-form generalization-bound evaluation. Every bound is computed
// from the exact pre-big-O expression with all constants itemized, so a
// report can be checked term by term. Unannotated logs are natural logs.

namespace asel {

struct BoundInputs {
    std::size_t s_problems = 0;  // |S_P|
    std::size_t s_algos = 0;     // |S_A|
    std::size_t t_problems = 0;  // |T_P|
    std::size_t t_algos = 0;     // |T_A|
    double eta = 0.0;            // |T|/|S|, < 1
    double delta = 0.05;
    double gamma_loss = 1.0;    // Lipschitz constant of the loss
    double gamma_margin = 0.1;  // margin for the margin-loss bounds
    NormReport norm;
    double sum_sq_norms = 0.0;   // sum over training instances of ||x_j||^2
    double max_sq_norm = 0.0;    // Gamma_S = max ||x_j||^2
    double sup_pf_af = 0.0;      // sup_i (||PF_i|| + ||AF_i||)
    double chi2 = 0.0;           // >= 0, may be +inf
    double p_transductive = 0.5; // documentation only; the final bounds are p-free

    std::size_t s_pairs() const { return s_problems * s_algos; }
    std::size_t t_pairs() const { return t_problems * t_algos; }
};

enum class BoundKind { Thm1, Cor1, Thm2, Cor2Reg, Cor2Cla, Thm3, Thm4, Cor5 };

inline const char* bound_kind_name(BoundKind k) {
    switch (k) {
        case BoundKind::Thm1: return "thm1";
        case BoundKind::Cor1: return "cor1";
        case BoundKind::Thm2: return "thm2";
        case BoundKind::Cor2Reg: return "cor2_reg";
        case BoundKind::Cor2Cla: return "cor2_cla";
        case BoundKind::Thm3: return "thm3";
        case BoundKind::Thm4: return "thm4";
        case BoundKind::Cor5: return "cor5";
    }
    return "?";
}

struct BoundReport {
    BoundKind kind = BoundKind::Thm1;
    double value = 0.0;
    std::map<std::string, double> terms;      // additive terms; value = their sum
    std::map<std::string, double> constants;  // itemized non-additive inputs
    bool applicable = true;
    std::string reason;

    double slack() const {
        auto it = terms.find("error_S");
        return value - (it == terms.end() ? 0.0 : it->second);
    }
};

// c_0 = sqrt(32 ln(4e) / 3) < 5.05
inline double c0() { return std::sqrt(32.0 * std::log(4.0 * std::exp(1.0)) / 3.0); }

// c_1 = sqrt(ln(log2(4/gamma))) + sqrt(ln(1/delta)); needs gamma < 2 so the
// inner log2 exceeds 1
inline double c1(double gamma_margin, double delta) {
    return std::sqrt(std::log(std::log2(4.0 / gamma_margin))) + std::sqrt(std::log(1.0 / delta));
}

namespace detail {

inline void require_counts(const BoundInputs& in) {
    if (in.s_pairs() == 0 || in.t_pairs() == 0)
        throw std::invalid_argument("bound inputs need non-zero train/test counts");
}

}  // namespace detail

// gamma * L * ||W0||_2 * (|S|+|T|) / (|S| |T|)
inline BoundReport thm1_transductive_complexity(const BoundInputs& in) {
    detail::require_counts(in);
    const double S = static_cast<double>(in.s_pairs());
    const double T = static_cast<double>(in.t_pairs());
    BoundReport r;
    r.kind = BoundKind::Thm1;
    const double v = in.gamma_loss * in.norm.lipschitz * in.norm.w0_spectral * (S + T) / (S * T);
    r.value = v;
    r.terms["complexity"] = v;
    r.constants = {{"gamma", in.gamma_loss},
                   {"L", in.norm.lipschitz},
                   {"w0_spectral", in.norm.w0_spectral},
                   {"S", S},
                   {"T", T}};
    return r;
}

// thm1 with sup_i(||PF_i|| + ||AF_i||) in place of ||W0||_2
inline BoundReport cor1_transductive_complexity(const BoundInputs& in) {
    detail::require_counts(in);
    const double S = static_cast<double>(in.s_pairs());
    const double T = static_cast<double>(in.t_pairs());
    BoundReport r;
    r.kind = BoundKind::Cor1;
    const double v = in.gamma_loss * in.norm.lipschitz * (S + T) / (S * T) * in.sup_pf_af;
    r.value = v;
    r.terms["complexity"] = v;
    r.constants = {{"gamma", in.gamma_loss},
                   {"L", in.norm.lipschitz},
                   {"sup_pf_af", in.sup_pf_af},
                   {"S", S},
                   {"T", T}};
    return r;
}

namespace detail {

// shared transductive slack: gamma*L*W0*(1+eta)/(eta*S') + c0*(1+eta)/sqrt(eta*S')
//                            + sqrt((1+eta) ln(1/delta) / (2 T'))
inline BoundReport transductive_bound(BoundKind kind, const BoundInputs& in, double error_s,
                                      double middle_scale, double s_count, double t_count) {
    BoundReport r;
    r.kind = kind;
    if (!(in.eta < 1.0)) {
        r.applicable = false;
        r.reason = "partition ratio eta >= 1: training set must be larger than the test set";
        return r;
    }
    if (!(in.delta > 0.0 && in.delta < 1.0))
        throw std::invalid_argument("delta must be in (0,1)");
    const double eta = in.eta;
    const double term1 = middle_scale * in.gamma_loss * in.norm.lipschitz * in.norm.w0_spectral *
                         (1.0 + eta) / (eta * s_count);
    const double term2 = c0() * (1.0 + eta) / std::sqrt(eta * s_count);
    const double term3 = std::sqrt((1.0 + eta) * std::log(1.0 / in.delta) / (2.0 * t_count));
    r.terms = {{"error_S", error_s}, {"term1_complexity", term1}, {"term2_c0", term2},
               {"term3_confidence", term3}};
    r.value = error_s + term1 + term2 + term3;
    r.constants = {{"c0", c0()},
                   {"eta", eta},
                   {"delta", in.delta},
                   {"gamma", in.gamma_loss},
                   {"L", in.norm.lipschitz},
                   {"w0_spectral", in.norm.w0_spectral},
                   {"middle_scale", middle_scale}};
    return r;
}

}  // namespace detail

inline BoundReport thm2_transductive_bound(const BoundInputs& in, double error_s) {
    detail::require_counts(in);
    return detail::transductive_bound(BoundKind::Thm2, in, error_s, 1.0,
                                      static_cast<double>(in.s_pairs()),
                                      static_cast<double>(in.t_pairs()));
}

// Problem-feature models: training size is the problem count; the
// classification variant pays an extra |S_A| factor on the complexity term.
inline BoundReport cor2_bounds(const BoundInputs& in, double error_s, bool classification) {
    detail::require_counts(in);
    return detail::transductive_bound(
        classification ? BoundKind::Cor2Cla : BoundKind::Cor2Reg, in, error_s,
        classification ? static_cast<double>(in.s_algos) : 1.0,
        static_cast<double>(in.s_problems), static_cast<double>(in.t_problems));
}

// (1/|S|) sqrt(2 l ln2 Gamma_f Sum + 2 Gamma_f^2 Sum^(3/2))
inline BoundReport thm3_inductive_complexity(const BoundInputs& in) {
    if (!(in.norm.frob_product > 0.0))
        throw std::invalid_argument("thm3 needs Gamma_f > 0");
    if (in.sum_sq_norms < 0.0) throw std::invalid_argument("thm3 needs sum of squared norms >= 0");
    const double S = static_cast<double>(in.s_pairs() ? in.s_pairs() : 1);
    const double gf = in.norm.frob_product;
    const double sum = in.sum_sq_norms;
    const double l = static_cast<double>(in.norm.layer_count);
    BoundReport r;
    r.kind = BoundKind::Thm3;
    const double v =
        std::sqrt(2.0 * l * std::log(2.0) * gf * sum + 2.0 * gf * gf * std::pow(sum, 1.5)) / S;
    r.value = v;
    r.terms["complexity"] = v;
    r.constants = {{"Gamma_f", gf}, {"sum_sq_norms", sum}, {"l", l}, {"S", S}};
    return r;
}

namespace detail {

// thm4 body with an explicit Gamma_S substitute (cor5 rebinds it)
inline BoundReport inductive_bound(BoundKind kind, const BoundInputs& in, double error_s,
                                   double gamma_s) {
    BoundReport r;
    r.kind = kind;
    if (!(in.gamma_margin > 0.0 && in.gamma_margin < 2.0)) {
        r.applicable = false;
        r.reason = "c1 undefined: margin must satisfy 0 < gamma < 2";
        return r;
    }
    if (!(in.delta > 0.0 && in.delta < 1.0))
        throw std::invalid_argument("delta must be in (0,1)");
    const double S = static_cast<double>(in.s_pairs());
    const double gf = in.norm.frob_product;
    const double l = static_cast<double>(in.norm.layer_count);
    const double term2 =
        4.0 * std::sqrt(2.0) / (std::sqrt(S) * in.gamma_margin) *
        std::sqrt(std::log(2.0) * l * gf * gamma_s + gf * gf * std::pow(gamma_s, 1.5) * std::sqrt(S));
    const double c1v = c1(in.gamma_margin, in.delta);
    const double term3 = c1v / std::sqrt(S);
    r.terms = {{"error_S", error_s}, {"term2_complexity", term2}, {"term3_c1", term3}};
    r.value = error_s + term2 + term3;
    r.constants = {{"c1", c1v},
                   {"Gamma_f", gf},
                   {"Gamma_S", gamma_s},
                   {"l", l},
                   {"S", S},
                   {"gamma_margin", in.gamma_margin},
                   {"delta", in.delta}};
    return r;
}

}  // namespace detail

inline BoundReport thm4_inductive_bound(const BoundInputs& in, double error_s) {
    detail::require_counts(in);
    return detail::inductive_bound(BoundKind::Thm4, in, error_s, in.max_sq_norm);
}

// thm4 with Gamma_S replaced by (chi^2 + 1) * Gamma_S; vacuous (and so
// inapplicable) when the test distribution escapes the training support.
inline BoundReport cor5_shifted_bound(const BoundInputs& in, double error_s) {
    detail::require_counts(in);
    if (!std::isfinite(in.chi2)) {
        BoundReport r;
        r.kind = BoundKind::Cor5;
        r.applicable = false;
        r.reason = "bound vacuous: test support exceeds training support (chi2 = inf)";
        return r;
    }
    if (in.chi2 < 0.0) throw std::invalid_argument("chi2 must be >= 0");
    BoundReport r =
        detail::inductive_bound(BoundKind::Cor5, in, error_s, (in.chi2 + 1.0) * in.max_sq_norm);
    r.kind = BoundKind::Cor5;
    if (r.applicable) {
        r.constants["chi2"] = in.chi2;
        r.constants["chi2_rate"] = std::pow(in.chi2 + 1.0, 0.75);
    }
    return r;
}

}  // namespace asel
