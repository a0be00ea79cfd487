#include "batchvac/pmf.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "batchvac/errors.hpp"

namespace batchvac {

double DiscretePmf::total() const {
    double s = 0.0;
    for (double m : mass) s += m;
    return s;
}

double DiscretePmf::mean() const {
    double s = 0.0;
    for (size_t i = 0; i < mass.size(); ++i) s += (offset + static_cast<double>(i)) * mass[i];
    return s;
}

std::complex<double> DiscretePmf::pgf(std::complex<double> z) const {
    // Horner over the support, then the offset power.
    std::complex<double> acc = 0.0;
    for (auto it = mass.rbegin(); it != mass.rend(); ++it) acc = acc * z + *it;
    return acc * std::pow(z, offset);
}

double DiscretePmf::pgf(double z) const {
    double acc = 0.0;
    for (auto it = mass.rbegin(); it != mass.rend(); ++it) acc = acc * z + *it;
    return acc * std::pow(z, offset);
}

void DiscretePmf::check(double tol) const {
    if (mass.empty()) throw NumericError("pmf has empty support");
    for (double m : mass)
        if (m < 0.0) throw NumericError("pmf has negative mass entry");
    if (mass.back() <= 0.0) throw NumericError("pmf not canonically trimmed (last entry is zero)");
    if (tail_defect < 0.0) throw NumericError("pmf has negative tail defect");
    double s = total() + tail_defect;
    if (std::abs(s - 1.0) > std::max(tol, 1e-12))
        throw NumericError("pmf mass plus tail defect is " + std::to_string(s) + ", not 1");
}

static void trim(DiscretePmf& p) {
    while (!p.mass.empty() && p.mass.back() == 0.0) p.mass.pop_back();
    if (p.mass.empty()) throw NumericError("pmf trimmed to empty support");
}

DiscretePmf geometric_pmf(double q, double tol) {
    if (!(q > 0.0) || q > 1.0) throw ConfigError("geometric parameter q must lie in (0,1]");
    return negative_binomial_pmf(1, q, tol);
}

DiscretePmf negative_binomial_pmf(int r, double q, double tol) {
    if (r < 1) throw ConfigError("negative binomial phase count r must be >= 1");
    if (!(q > 0.0) || q > 1.0) throw ConfigError("negative binomial parameter q must lie in (0,1]");
    DiscretePmf p;
    p.offset = r;
    if (q == 1.0) {
        p.mass = {1.0};
        return p;
    }
    // pmf(n) = C(n-1, r-1) q^r (1-q)^(n-r), n >= r, via the ratio recurrence.
    double cur = std::pow(q, r);
    double tail = 1.0 - cur;
    p.mass.push_back(cur);
    int n = r;
    while (tail >= tol && n < 100000000) {
        cur *= (1.0 - q) * static_cast<double>(n) / static_cast<double>(n - r + 1);
        ++n;
        p.mass.push_back(cur);
        tail -= cur;
    }
    p.tail_defect = std::max(tail, 0.0);
    trim(p);
    return p;
}

DiscretePmf deterministic_pmf(int d) {
    if (d < 0) throw ConfigError("deterministic value must be >= 0");
    DiscretePmf p;
    p.offset = d;
    p.mass = {1.0};
    return p;
}

DiscretePmf explicit_pmf(int offset, std::vector<double> mass) {
    if (offset < 0) throw ConfigError("explicit pmf offset must be >= 0");
    if (mass.empty()) throw ConfigError("explicit pmf must have at least one mass entry");
    double s = 0.0;
    for (double m : mass) {
        if (m < 0.0) throw ConfigError("explicit pmf entries must be >= 0");
        s += m;
    }
    // No silent renormalization beyond 1e-9 slack.
    if (std::abs(s - 1.0) > 1e-9)
        throw ConfigError("explicit pmf sums to " + std::to_string(s) + "; must be 1 within 1e-9");
    DiscretePmf p;
    p.offset = offset;
    p.mass = std::move(mass);
    for (double& m : p.mass) m /= s;
    trim(p);
    while (p.mass.front() == 0.0) {
        p.mass.erase(p.mass.begin());
        ++p.offset;
    }
    return p;
}

static Eigen::MatrixXd trans_matrix(const DphParams& params) {
    const size_t m = params.init.size();
    if (m == 0) throw ConfigError("dph initial vector is empty");
    if (params.trans.size() != m) throw ConfigError("dph matrix must be square and match init length");
    Eigen::MatrixXd T(m, m);
    for (size_t i = 0; i < m; ++i) {
        if (params.trans[i].size() != m) throw ConfigError("dph matrix must be square");
        double row = 0.0;
        for (size_t j = 0; j < m; ++j) {
            double v = params.trans[i][j];
            if (v < 0.0 || v > 1.0) throw ConfigError("dph matrix entries must lie in [0,1]");
            T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            row += v;
        }
        if (row > 1.0 + 1e-12) throw ConfigError("dph matrix row sums must be <= 1");
    }
    double is = 0.0;
    for (double v : params.init) {
        if (v < 0.0 || v > 1.0) throw ConfigError("dph initial probabilities must lie in [0,1]");
        is += v;
    }
    if (!(is > 0.0) || is > 1.0 + 1e-12) throw ConfigError("dph initial vector must sum to (0,1]");
    return T;
}

double dph_spectral_radius(const DphParams& params) {
    Eigen::MatrixXd T = trans_matrix(params);
    Eigen::EigenSolver<Eigen::MatrixXd> es(T, false);
    double sr = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        sr = std::max(sr, std::abs(es.eigenvalues()[i]));
    return sr;
}

double dph_mean(const DphParams& params) {
    Eigen::MatrixXd T = trans_matrix(params);
    const Eigen::Index m = T.rows();
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
    Eigen::VectorXd x = (Eigen::MatrixXd::Identity(m, m) - T).partialPivLu().solve(ones);
    Eigen::Map<const Eigen::VectorXd> beta(params.init.data(), m);
    return beta.dot(x);
}

DiscretePmf dph_pmf(const DphParams& params, double tol) {
    Eigen::MatrixXd T = trans_matrix(params);
    if (dph_spectral_radius(params) >= 1.0 - 1e-14)
        throw NumericError("dph transition matrix is not absorbing (spectral radius >= 1)");
    const Eigen::Index m = T.rows();
    Eigen::VectorXd exit = Eigen::VectorXd::Ones(m) - T.rowwise().sum();
    Eigen::RowVectorXd v(m);
    double init_total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        v(i) = params.init[static_cast<size_t>(i)];
        init_total += v(i);
    }
    DiscretePmf p;
    // Mass 1 - sum(init) is absorbed at time 0; such laws are rejected later
    // wherever a duration of at least one slot is required.
    double head = 1.0 - init_total;
    if (head > 1e-15) {
        p.offset = 0;
        p.mass.push_back(head);
    } else {
        p.offset = 1;
    }
    // Iterated vector-matrix products; no eigendecomposition.
    for (int n = 1; n < 10000000; ++n) {
        double mass = v.dot(exit);
        p.mass.push_back(mass);
        v = v * T;
        if (v.sum() < tol) {
            p.tail_defect = std::max(v.sum(), 0.0);
            trim(p);
            return p;
        }
    }
    throw NumericError("dph pmf did not reach the truncation tolerance");
}

DiscretePmf convolve(const DiscretePmf& a, const DiscretePmf& b) {
    DiscretePmf c;
    c.offset = a.offset + b.offset;
    c.mass.assign(a.mass.size() + b.mass.size() - 1, 0.0);
    for (size_t i = 0; i < a.mass.size(); ++i) {
        if (a.mass[i] == 0.0) continue;
        for (size_t j = 0; j < b.mass.size(); ++j) c.mass[i + j] += a.mass[i] * b.mass[j];
    }
    c.tail_defect = a.tail_defect + b.tail_defect - a.tail_defect * b.tail_defect;
    trim(c);
    return c;
}

}  // namespace batchvac
