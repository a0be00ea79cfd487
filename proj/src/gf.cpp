#include "batchvac/gf.hpp"

#include <cmath>

#include "batchvac/errors.hpp"

namespace batchvac {

double ArrivalCountSeries::total() const {
    double s = 0.0;
    for (double c : coeffs) s += c;
    return s;
}

double ArrivalCountSeries::mean() const {
    double s = 0.0;
    for (size_t i = 0; i < coeffs.size(); ++i) s += static_cast<double>(i) * coeffs[i];
    return s;
}

DiscretePmf slot_arrival_pmf(double lambda, const DiscretePmf& g) {
    if (!(lambda > 0.0) || lambda >= 1.0) throw ConfigError("lambda must be in (0,1)");
    DiscretePmf p;
    p.offset = 0;
    p.mass.assign(static_cast<size_t>(g.max_value()) + 1, 0.0);
    p.mass[0] = 1.0 - lambda;
    for (int j = g.offset; j <= g.max_value(); ++j) p.mass[static_cast<size_t>(j)] += lambda * g.at(j);
    p.tail_defect = lambda * g.tail_defect;
    return p;
}

SlotArrivalPowers::SlotArrivalPowers(double lambda, const DiscretePmf& g) {
    base_ = slot_arrival_pmf(lambda, g).mass;
    powers_.push_back({1.0});
}

const std::vector<double>& SlotArrivalPowers::power(int n) {
    while (static_cast<int>(powers_.size()) <= n) {
        const auto& prev = powers_.back();
        std::vector<double> next(prev.size() + base_.size() - 1, 0.0);
        for (size_t i = 0; i < prev.size(); ++i) {
            if (prev[i] == 0.0) continue;
            for (size_t j = 0; j < base_.size(); ++j) next[i + j] += prev[i] * base_[j];
        }
        powers_.push_back(std::move(next));
    }
    return powers_[static_cast<size_t>(n)];
}

ArrivalCountSeries arrivals_during(const DiscretePmf& duration, SlotArrivalPowers& powers) {
    ArrivalCountSeries out;
    for (int ell = duration.offset; ell <= duration.max_value(); ++ell) {
        double w = duration.at(ell);
        if (w == 0.0) continue;
        const auto& pw = powers.power(ell);
        if (out.coeffs.size() < pw.size()) out.coeffs.resize(pw.size(), 0.0);
        for (size_t i = 0; i < pw.size(); ++i) out.coeffs[i] += w * pw[i];
    }
    out.tail_defect = 1.0 - out.total();
    if (out.tail_defect < 0.0) out.tail_defect = 0.0;
    return out;
}

ArrivalCountSeries arrivals_during(const DiscretePmf& duration, double lambda, const DiscretePmf& g) {
    SlotArrivalPowers powers(lambda, g);
    return arrivals_during(duration, powers);
}

RenewalTable renewal_table(const DiscretePmf& g, int n_max) {
    RenewalTable t;
    t.u.assign(static_cast<size_t>(n_max) + 1, 0.0);
    t.u[0] = 1.0;
    for (int d = 1; d <= n_max; ++d) {
        double s = 0.0;
        for (int j = g.offset; j <= std::min(g.max_value(), d); ++j)
            s += g.at(j) * t.u[static_cast<size_t>(d - j)];
        t.u[static_cast<size_t>(d)] = s;
    }
    return t;
}

double VacationCascade::weight(int t, int j) const {
    double s = 0.0;
    int kmax = std::min(t, a - 1);
    for (int k = j; k <= kmax; ++k) {
        double st = starts[static_cast<size_t>(k)][static_cast<size_t>(j)];
        if (st == 0.0) continue;
        s += st * arrivals[static_cast<size_t>(k)]->at(static_cast<size_t>(t - k));
    }
    return s;
}

VacationCascade vacation_cascade(const ModelSpec& spec, const std::vector<ArrivalCountSeries>& h) {
    const int a = spec.a;
    const double delta = spec.multiple() ? 1.0 : 0.0;
    VacationCascade c;
    c.a = a;
    c.multiple = spec.multiple();
    c.arrivals.resize(static_cast<size_t>(a));
    for (int k = 0; k < a; ++k) {
        c.arrivals[static_cast<size_t>(k)] = &h[static_cast<size_t>(k)];
        if (delta > 0.0 && h[static_cast<size_t>(k)].at(0) >= 1.0 - 1e-15)
            throw NumericError("divergent vacation chain: type " + std::to_string(k) +
                               " vacations never see an arrival");
    }
    c.starts.assign(static_cast<size_t>(a), std::vector<double>(static_cast<size_t>(a), 0.0));
    // starts[k][j] = [k==j] + delta * sum_{m<=k} starts[m][j] h^{(m)}_{k-m};
    // the k==m self-loop folds into the (1 - delta h0) diagonal.
    for (int j = 0; j < a; ++j) {
        for (int k = j; k < a; ++k) {
            double v = (k == j) ? 1.0 : 0.0;
            for (int m = j; m < k; ++m)
                v += delta * c.starts[static_cast<size_t>(m)][static_cast<size_t>(j)] *
                     h[static_cast<size_t>(m)].at(static_cast<size_t>(k - m));
            c.starts[static_cast<size_t>(k)][static_cast<size_t>(j)] =
                v / (1.0 - delta * h[static_cast<size_t>(k)].at(0));
        }
    }
    return c;
}

Poly sos_mix_series(int i, const ModelSpec& spec, const std::vector<ArrivalCountSeries>& t,
                    const std::vector<double>* weights) {
    const int m = spec.a + i - 1;
    if (i < 1 || m > spec.b) throw ConfigError("sos mixture index out of range");
    Poly out;
    for (int y = 1; y <= m; ++y) {
        double w = sos_join_prob(m, y, spec.p_sos);
        if (weights) w *= (*weights)[static_cast<size_t>(y - 1)];
        if (w == 0.0) continue;
        poly::add_scaled(out, t[static_cast<size_t>(y - 1)].coeffs, w);
    }
    poly::trim(out);
    return out;
}

}  // namespace batchvac
