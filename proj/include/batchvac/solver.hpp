#pragma once

#include <complex>
#include <vector>

#include "batchvac/gf.hpp"
#include "batchvac/model.hpp"
#include "batchvac/poly.hpp"

namespace batchvac {

/// Characteristic function of the queue-variable pgf denominator:
/// d(z) = z^b - phi(z) with phi(z) = (chi_{b,0} + sum_y chi_{b,y} T^y(z)) K^b(z).
/// d(1) = 0 always; a stable model puts exactly b roots in the closed unit
/// disk, the one at z=1 simple.
struct CharacteristicFn {
    int b = 1;
    Poly d;
    Poly phi;
};

struct RootSet {
    std::vector<std::complex<double>> interior;  // |z| < 1-eps, sorted by (modulus, argument)
    std::complex<double> unit{1.0, 0.0};
    std::vector<std::complex<double>> exterior;  // |z| > 1+eps, sorted by modulus
    /// True when `exterior` holds every root of d; false when only the
    /// tail-governing dominant root could be certified (high-degree case).
    bool exterior_complete = false;

    /// Modulus of the smallest exterior root; 0 when there is none
    /// (the transform is a polynomial and the distribution has finite support).
    double min_exterior_modulus() const {
        return exterior.empty() ? 0.0 : std::abs(exterior.front());
    }
};

/// Joint distribution at service/vacation completion epochs. The alpha, beta
/// and gamma blocks form the embedded completion-epoch measure and sum to 1
/// up to the certified truncation remainder. theta holds the arbitrary-slot
/// dormant probabilities (single-vacation policy; all zero otherwise) which
/// several downstream formulas consume.
struct DepartureDistribution {
    int a = 1, b = 1;
    int truncation = 0;                       // entries stored for n = 0..truncation
    std::vector<std::vector<double>> alpha;   // [r-a][n], FES batch r completions
    std::vector<std::vector<double>> beta;    // [y-1][n], SOS batch y completions
    std::vector<std::vector<double>> gamma;   // [k][n], type-k vacation completions
    std::vector<double> theta;                // [n], n = 0..a-1
    double tail_rate = 0.0;                   // geometric decay rate of the tail
    double tail_mass_bound = 0.0;             // certified remainder bound
    int clipped_negative = 0;                 // entries in [-1e-12, 0) zeroed

    double alpha_at(int r, int n) const;
    double beta_at(int y, int n) const;
    double gamma_at(int k, int n) const;
    double alpha_row(int n) const;  // sum over r
    double beta_row(int n) const;   // sum over y
    double gamma_row(int n) const;  // sum over k
    double alpha_total() const;
    double beta_total() const;
    double gamma_total() const;
    double theta_total() const;
};

/// tau: completion-epoch rate per slot. big_lambda: expected non-dormant time
/// between consecutive completion epochs. e_star: lambda / tau, the
/// normalizer connecting completion-epoch and arbitrary-slot probabilities.
struct NormalizationConstants {
    double tau = 0.0;
    double big_lambda = 0.0;
    double e_star = 0.0;
};

struct SolverOptions {
    double root_eps = 1e-7;          // unit-circle classification band
    double tail_bound = 1e-10;       // target certified truncation remainder
    int max_terms = 200000;          // hard cap on the stored truncation
    int companion_max_degree = 160;  // full root set only up to this degree
};

CharacteristicFn characteristic(const ModelSpec& spec);
RootSet find_roots(const CharacteristicFn& cf, double eps = 1e-7);

/// The b boundary constants: per-level departure inflows
/// S_n = sum_r alpha+_{n,r} chi_{r,0} + sum_y beta+_{n,y} for n = 0..b-1,
/// fixed by analyticity at the interior roots plus normalization.
std::vector<double> solve_boundary(const ModelSpec& spec, const SolverOptions& opts = {});

DepartureDistribution extract_departure(const ModelSpec& spec, const std::vector<double>& boundary,
                                        const SolverOptions& opts = {});

NormalizationConstants tau_lambda(const ModelSpec& spec, const DepartureDistribution& dep);

struct AnalyticSolution {
    CharacteristicFn cf;
    RootSet roots;
    std::vector<double> boundary;
    DepartureDistribution departure;
    NormalizationConstants constants;
};

/// Full analytic pipeline: characteristic function, roots, boundary solve,
/// coefficient extraction and normalization constants.
AnalyticSolution solve_analytic(const ModelSpec& spec, const SolverOptions& opts = {});

}  // namespace batchvac
