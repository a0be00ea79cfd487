#pragma once

#include <vector>

#include "batchvac/model.hpp"
#include "batchvac/pmf.hpp"
#include "batchvac/poly.hpp"

namespace batchvac {

/// Distribution of the number of customers arriving over a tagged duration:
/// coeffs[i] = P(i arrivals). Finite because every input pmf is finite after
/// truncation; the inherited truncation loss is carried in tail_defect.
struct ArrivalCountSeries {
    std::vector<double> coeffs;
    double tail_defect = 0.0;

    double at(size_t i) const { return i < coeffs.size() ? coeffs[i] : 0.0; }
    double total() const;
    double mean() const;
};

/// Per-slot arrival law of the compound Bernoulli process:
/// mass(0) = 1-lambda, mass(j) = lambda * g_j.
DiscretePmf slot_arrival_pmf(double lambda, const DiscretePmf& g);

/// Memoized convolution powers of the slot arrival law.
class SlotArrivalPowers {
  public:
    SlotArrivalPowers(double lambda, const DiscretePmf& g);
    /// Coefficients of (slot arrival pmf)^(convolution n).
    const std::vector<double>& power(int n);

  private:
    std::vector<std::vector<double>> powers_;
    std::vector<double> base_;
};

/// Arrival-count law over a random duration; equals the coefficient sequence
/// of the duration pgf composed with (1-lambda) + lambda*G(z).
ArrivalCountSeries arrivals_during(const DiscretePmf& duration, double lambda, const DiscretePmf& g);
ArrivalCountSeries arrivals_during(const DiscretePmf& duration, SlotArrivalPowers& powers);

/// Renewal mass function of the group-size law: u[0]=1,
/// u[d] = sum_s g_s u[d-s]; u[d] is the probability that the partial sums of
/// i.i.d. group sizes ever hit d. The table entry e(n,i) used by the dormant
/// accounting equals u[n-i].
struct RenewalTable {
    std::vector<double> u;
    double e(int n, int i) const { return u[static_cast<size_t>(n - i)]; }
};
RenewalTable renewal_table(const DiscretePmf& g, int n_max);

/// Linear reduction of the vacation-completion unknowns onto the departure
/// inflows: one unit of departure flow into level j (< a) starts vacation
/// chains; starts[k][j] is the expected number of type-k vacation starts it
/// produces (single policy: exactly [k==j]); the expected vacation
/// completions at queue t are then sum_j weight(t,j) * inflow_j.
struct VacationCascade {
    int a = 0;
    bool multiple = false;
    std::vector<std::vector<double>> starts;          // [k][j], k,j < a
    std::vector<const ArrivalCountSeries*> arrivals;  // h-series per type (borrowed)

    /// Expected completions at queue level t from a unit inflow at level j.
    double weight(int t, int j) const;
};

/// Builds the cascade; throws NumericError when the multiple policy would
/// diverge because some vacation type never sees an arrival
/// (h_0 = 1 for that type).
VacationCascade vacation_cascade(const ModelSpec& spec, const std::vector<ArrivalCountSeries>& h);

/// Polynomial in z of the thinned second-service mixture for FES batch size
/// m = a+i-1: sum_{y=1..m} chi_{m,y} w_y T^y(z). With unit weights this is
/// the mixture evaluated on the queue-variable diagonal.
Poly sos_mix_series(int i, const ModelSpec& spec, const std::vector<ArrivalCountSeries>& t,
                    const std::vector<double>* weights = nullptr);

}  // namespace batchvac
