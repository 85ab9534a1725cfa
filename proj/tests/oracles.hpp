#pragma once

// Independent long-double re-evaluations of the closed-form bounds, written
// separately from the library so oracle and implementation can only agree by
// computing the same mathematics.

#include <cmath>

#include "asel/bounds.hpp"
#include "asel/prng.hpp"

namespace oracle {

inline long double c0() { return sqrtl(32.0L * logl(4.0L * expl(1.0L)) / 3.0L); }

inline long double c1(long double gamma, long double delta) {
    return sqrtl(logl(logl(4.0L / gamma) / logl(2.0L))) + sqrtl(logl(1.0L / delta));
}

struct In {
    long double s_p, s_a, t_p, t_a;
    long double eta, delta, gamma_loss, gamma_margin;
    long double lipschitz, frob_product, w0_spectral, layer_count;
    long double sum_sq, max_sq, sup_pf_af, chi2;
};

inline In from(const asel::BoundInputs& b) {
    return {static_cast<long double>(b.s_problems), static_cast<long double>(b.s_algos),
            static_cast<long double>(b.t_problems), static_cast<long double>(b.t_algos),
            static_cast<long double>(b.eta),        static_cast<long double>(b.delta),
            static_cast<long double>(b.gamma_loss), static_cast<long double>(b.gamma_margin),
            static_cast<long double>(b.norm.lipschitz),
            static_cast<long double>(b.norm.frob_product),
            static_cast<long double>(b.norm.w0_spectral),
            static_cast<long double>(b.norm.layer_count),
            static_cast<long double>(b.sum_sq_norms),
            static_cast<long double>(b.max_sq_norm),
            static_cast<long double>(b.sup_pf_af),  static_cast<long double>(b.chi2)};
}

inline long double thm1(const In& i) {
    const long double S = i.s_p * i.s_a, T = i.t_p * i.t_a;
    return i.gamma_loss * i.lipschitz * i.w0_spectral * (S + T) / (S * T);
}

inline long double cor1(const In& i) {
    const long double S = i.s_p * i.s_a, T = i.t_p * i.t_a;
    return i.gamma_loss * i.lipschitz * i.sup_pf_af * (S + T) / (S * T);
}

inline long double transductive(const In& i, long double err, long double scale, long double S,
                                long double T) {
    return err + scale * i.gamma_loss * i.lipschitz * i.w0_spectral * (1.0L + i.eta) / (i.eta * S) +
           c0() * (1.0L + i.eta) / sqrtl(i.eta * S) +
           sqrtl((1.0L + i.eta) * logl(1.0L / i.delta) / (2.0L * T));
}

inline long double thm2(const In& i, long double err) {
    return transductive(i, err, 1.0L, i.s_p * i.s_a, i.t_p * i.t_a);
}

inline long double cor2(const In& i, long double err, bool cla) {
    return transductive(i, err, cla ? i.s_a : 1.0L, i.s_p, i.t_p);
}

inline long double thm3(const In& i) {
    const long double S = i.s_p * i.s_a;
    return sqrtl(2.0L * i.layer_count * logl(2.0L) * i.frob_product * i.sum_sq +
                 2.0L * i.frob_product * i.frob_product * powl(i.sum_sq, 1.5L)) /
           S;
}

inline long double inductive(const In& i, long double err, long double gs) {
    const long double S = i.s_p * i.s_a;
    return err +
           4.0L * sqrtl(2.0L) / (sqrtl(S) * i.gamma_margin) *
               sqrtl(logl(2.0L) * i.layer_count * i.frob_product * gs +
                     i.frob_product * i.frob_product * powl(gs, 1.5L) * sqrtl(S)) +
           c1(i.gamma_margin, i.delta) / sqrtl(S);
}

inline long double thm4(const In& i, long double err) { return inductive(i, err, i.max_sq); }

inline long double cor5(const In& i, long double err) {
    return inductive(i, err, (i.chi2 + 1.0L) * i.max_sq);
}

// random but valid bound inputs
inline asel::BoundInputs random_inputs(asel::Rng& rng) {
    asel::BoundInputs in;
    in.s_problems = 10 + rng.uniform_int(5000);
    in.s_algos = 1 + rng.uniform_int(20);
    in.t_problems = 1 + rng.uniform_int(in.s_problems - 1);
    in.t_algos = in.s_algos;
    in.eta = static_cast<double>(in.t_problems) / static_cast<double>(in.s_problems);
    in.delta = rng.uniform(0.01, 0.5);
    in.gamma_loss = rng.uniform(0.1, 6.0);
    in.gamma_margin = rng.uniform(0.02, 1.9);
    in.norm.lipschitz = rng.uniform(0.1, 50.0);
    in.norm.frob_product = rng.uniform(0.1, 50.0);
    in.norm.w0_spectral = rng.uniform(0.1, 20.0);
    in.norm.layer_count = 1 + rng.uniform_int(6);
    in.sum_sq_norms = rng.uniform(0.0, 1e4);
    in.max_sq_norm = rng.uniform(0.0, 50.0);
    in.sup_pf_af = rng.uniform(0.0, 30.0);
    in.chi2 = rng.uniform(0.0, 10.0);
    return in;
}

}  // namespace oracle
