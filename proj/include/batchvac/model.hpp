#pragma once

#include <map>
#include <vector>

#include "batchvac/pmf.hpp"

namespace batchvac {

enum class VacationPolicy { Single, Multiple };

/// Complete parameterization of the queue: (a,b) bulk service thresholds,
/// compound Bernoulli arrivals (rate lambda, group size pmf), binomially
/// thinned second service with per-customer opt-in probability p_sos,
/// per-batch-size first/second service duration laws and per-type vacation
/// laws, and the vacation policy.
struct ModelSpec {
    int a = 1;
    int b = 1;
    double lambda = 0.0;
    DiscretePmf group_size;
    double p_sos = 0.0;
    std::map<int, DiscretePmf> fes;       // r = a..b
    std::map<int, DiscretePmf> sos;       // y = 1..b
    std::map<int, DiscretePmf> vacation;  // k = 0..a-1
    VacationPolicy policy = VacationPolicy::Single;

    bool multiple() const { return policy == VacationPolicy::Multiple; }
    double group_mean() const { return group_size.mean(); }
    const DiscretePmf& fes_at(int r) const { return fes.at(r); }
    const DiscretePmf& sos_at(int y) const { return sos.at(y); }
    const DiscretePmf& vacation_at(int k) const { return vacation.at(k); }
};

/// Probability that y of the r customers just served opt into the second
/// service stage (binomial thinning).
double sos_join_prob(int r, int y, double p);

/// Row r (a<=r<=b) of the thinning matrix; entry y in 0..r.
std::vector<std::vector<double>> sos_join_matrix(const ModelSpec& spec);

/// Offered work per slot per unit capacity; the chain is ergodic iff < 1.
double traffic_intensity(const ModelSpec& spec);

/// Verifies every ModelSpec invariant including the stability gate.
/// Throws ConfigError for structural problems and InstabilityError when
/// traffic_intensity(spec) >= 1.
void validate(const ModelSpec& spec);

}  // namespace batchvac
