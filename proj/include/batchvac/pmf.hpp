#pragma once

#include <complex>
#include <vector>

namespace batchvac {

// Default truncation tolerance for infinite-support laws. Truncated pmfs are
// never renormalized; the discarded mass is carried in tail_defect so that
// downstream normalization checks stay honest.
inline constexpr double kDefaultTruncationTol = 1e-12;

/// Finite-support probability mass function on non-negative integers.
/// mass[i] is the probability of value offset+i; the last entry is > 0.
struct DiscretePmf {
    int offset = 0;
    std::vector<double> mass;
    double tail_defect = 0.0;

    int max_value() const { return offset + static_cast<int>(mass.size()) - 1; }
    double at(int n) const {
        int i = n - offset;
        return (i >= 0 && i < static_cast<int>(mass.size())) ? mass[static_cast<size_t>(i)] : 0.0;
    }
    double total() const;
    double mean() const;
    std::complex<double> pgf(std::complex<double> z) const;
    double pgf(double z) const;

    /// Checks the structural invariants (non-negativity, sum+defect ~ 1,
    /// canonical trimming). Throws NumericError on violation.
    void check(double tol = 1e-12) const;
};

/// Discrete phase-type parameters: initial row vector and sub-stochastic
/// transition matrix over the m transient phases.
struct DphParams {
    std::vector<double> init;
    std::vector<std::vector<double>> trans;
};

DiscretePmf geometric_pmf(double q, double tol = kDefaultTruncationTol);
DiscretePmf negative_binomial_pmf(int r, double q, double tol = kDefaultTruncationTol);
DiscretePmf deterministic_pmf(int d);
DiscretePmf explicit_pmf(int offset, std::vector<double> mass);

/// pmf of the absorption time: pmf(n) = init * trans^(n-1) * (I - trans) 1.
DiscretePmf dph_pmf(const DphParams& params, double tol = kDefaultTruncationTol);
/// Closed-form mean absorption time init * (I - trans)^-1 * 1.
double dph_mean(const DphParams& params);
/// Largest eigenvalue modulus of trans; absorption is certain iff < 1.
double dph_spectral_radius(const DphParams& params);

/// pmf of the sum of two independent variables; offsets add.
DiscretePmf convolve(const DiscretePmf& a, const DiscretePmf& b);

}  // namespace batchvac
