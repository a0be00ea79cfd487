#include "batchvac/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "batchvac/errors.hpp"

namespace batchvac {

namespace {

double block_sum(const std::vector<std::vector<double>>& block) {
    double s = 0.0;
    for (const auto& row : block) s = std::accumulate(row.begin(), row.end(), s);
    return s;
}

double row_sum(const std::vector<std::vector<double>>& block, int n) {
    double s = 0.0;
    for (const auto& row : block)
        if (n < static_cast<int>(row.size())) s += row[static_cast<size_t>(n)];
    return s;
}

// Shared precomputation for the analytic pipeline.
struct AnalyticContext {
    const ModelSpec& spec;
    int a, b;
    double lambda, p;
    std::vector<ArrivalCountSeries> K;  // index r-a, arrivals during FES of r
    std::vector<ArrivalCountSeries> T;  // index y-1, arrivals during SOS of y
    std::vector<ArrivalCountSeries> H;  // index k, arrivals during type-k vacation
    std::vector<Poly> X;                // index m-a: chi_{m,0} + sum_y chi_{m,y} T^y
    Poly D;                             // z^b - X_b K^b
    Poly Phi;                           // X_b K^b
    RenewalTable u;
    VacationCascade cascade;

    explicit AnalyticContext(const ModelSpec& s) : spec(s), a(s.a), b(s.b), lambda(s.lambda), p(s.p_sos) {
        SlotArrivalPowers powers(lambda, s.group_size);
        for (int r = a; r <= b; ++r) K.push_back(arrivals_during(s.fes_at(r), powers));
        for (int y = 1; y <= b; ++y) T.push_back(arrivals_during(s.sos_at(y), powers));
        for (int k = 0; k < a; ++k) H.push_back(arrivals_during(s.vacation_at(k), powers));
        for (int m = a; m <= b; ++m) {
            Poly x = {sos_join_prob(m, 0, p)};
            poly::add_scaled(x, sos_mix_series(m - a + 1, s, T), 1.0);
            poly::trim(x);
            X.push_back(std::move(x));
        }
        Phi = poly::mul(X.back(), K.back().coeffs);
        D = Phi;
        for (double& c : D) c = -c;
        if (static_cast<int>(D.size()) < b + 1) D.resize(static_cast<size_t>(b) + 1, 0.0);
        D[static_cast<size_t>(b)] += 1.0;
        poly::trim(D);
        int umax = std::max(b, a - 1 + spec.group_size.max_value()) + 1;
        u = renewal_table(s.group_size, umax);
        cascade = vacation_cascade(s, H);
    }

    const ArrivalCountSeries& k_series(int r) const { return K[static_cast<size_t>(r - a)]; }
    const ArrivalCountSeries& t_series(int y) const { return T[static_cast<size_t>(y - 1)]; }
    const ArrivalCountSeries& h_series(int k) const { return H[static_cast<size_t>(k)]; }
    const Poly& x_poly(int m) const { return X[static_cast<size_t>(m - a)]; }

    // Dormant-exit weight: probability that a dormant stretch entered at
    // level n ends with the queue at exactly q (>= a). Single policy only.
    double dorm_exit(int n, int q) const {
        double s = 0.0;
        for (int j = n; j < a; ++j) s += u.e(j, n) * spec.group_size.at(q - j);
        return s;
    }
};

// Linear forms in the b boundary unknowns: every z-coefficient of the
// numerator building blocks is a row vector over S_0..S_{b-1}.
struct LinearPoly {
    Eigen::MatrixXd c;  // rows: powers of z, cols: b unknowns

    explicit LinearPoly(int len, int nvars) : c(Eigen::MatrixXd::Zero(len, nvars)) {}
    void add(int power, const Eigen::RowVectorXd& form, double w) {
        if (w != 0.0) c.row(power) += w * form;
    }
    Eigen::RowVectorXcd eval(std::complex<double> z) const {
        Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(c.cols());
        for (Eigen::Index i = c.rows(); i-- > 0;) acc = acc * z + c.row(i).cast<std::complex<double>>();
        return acc;
    }
    Eigen::RowVectorXd sum() const {
        Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(c.cols());
        for (Eigen::Index i = 0; i < c.rows(); ++i) s += c.row(i);
        return s;
    }
    Eigen::RowVectorXd derivative_at_one() const {
        Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(c.cols());
        for (Eigen::Index i = 1; i < c.rows(); ++i) s += static_cast<double>(i) * c.row(i);
        return s;
    }
};

struct BoundaryForms {
    // gamma_plus[t]: completions at queue t as a form in S (t = 0..b-1).
    std::vector<Eigen::RowVectorXd> gamma_plus;
    // inflow[k]: type-k vacation starts as a form in S (k = 0..a-1).
    std::vector<Eigen::RowVectorXd> inflow;
    // fes_inflow[m-a]: J_m(0) for m = a..b-1.
    std::vector<Eigen::RowVectorXd> fes_inflow;
    LinearPoly R{0, 0};
};

BoundaryForms build_forms(const AnalyticContext& cx) {
    const int a = cx.a, b = cx.b;
    const double delta = cx.spec.multiple() ? 1.0 : 0.0;
    const int gmax = cx.spec.group_size.max_value();
    BoundaryForms f;

    auto unit = [&](int j) {
        Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(b);
        v(j) = 1.0;
        return v;
    };

    f.gamma_plus.resize(static_cast<size_t>(b), Eigen::RowVectorXd::Zero(b));
    for (int t = 0; t < b; ++t)
        for (int j = 0; j <= std::min(t, a - 1); ++j)
            f.gamma_plus[static_cast<size_t>(t)] += cx.cascade.weight(t, j) * unit(j);

    f.inflow.resize(static_cast<size_t>(a), Eigen::RowVectorXd::Zero(b));
    for (int k = 0; k < a; ++k)
        f.inflow[static_cast<size_t>(k)] = unit(k) + delta * f.gamma_plus[static_cast<size_t>(k)];

    auto dorm_exact = [&](int q) {
        Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(b);
        if (delta == 0.0)
            for (int n = 0; n < a; ++n) v += cx.dorm_exit(n, q) * f.gamma_plus[static_cast<size_t>(n)];
        return v;
    };

    for (int m = a; m < b; ++m)
        f.fes_inflow.push_back(unit(m) + f.gamma_plus[static_cast<size_t>(m)] + dorm_exact(m));

    // R(z): numerator of the size-b FES series over K^b, assembled so that
    // Pi_b(z) = K^b(z) R(z) / D(z).
    int len = b + 1;
    for (int m = a; m < b; ++m)
        len = std::max(len, static_cast<int>(cx.x_poly(m).size() + cx.k_series(m).coeffs.size()) - 1);
    for (int k = 0; k < a; ++k) len = std::max(len, k + static_cast<int>(cx.h_series(k).coeffs.size()));
    len = std::max(len, a - 1 + gmax + 1);
    LinearPoly R(len, b);

    for (int m = a; m < b; ++m) {
        Poly xk = poly::mul(cx.x_poly(m), cx.k_series(m).coeffs);
        for (size_t i = 0; i < xk.size(); ++i)
            R.add(static_cast<int>(i), f.fes_inflow[static_cast<size_t>(m - a)], xk[i]);
    }
    for (int k = 0; k < a; ++k) {
        const auto& h = cx.h_series(k).coeffs;
        for (size_t i = 0; i < h.size(); ++i)
            R.add(k + static_cast<int>(i), f.inflow[static_cast<size_t>(k)], h[i]);
    }
    for (int q = 0; q < b; ++q) {
        R.add(q, unit(q), -1.0);
        R.add(q, f.gamma_plus[static_cast<size_t>(q)], -1.0);
    }
    if (delta == 0.0) {
        // Dormant exits: full series  sum_n gamma+_n sum_j e(j,n) sum_{i>=a-j} g_i z^{i+j}
        // minus the exits at levels a..b-1 already routed through fes_inflow.
        for (int n = 0; n < a; ++n) {
            for (int j = n; j < a; ++j) {
                double ej = cx.u.e(j, n);
                for (int i = std::max(1, a - j); i <= gmax; ++i) {
                    double w = ej * cx.spec.group_size.at(i);
                    R.add(i + j, f.gamma_plus[static_cast<size_t>(n)], w);
                }
            }
        }
        for (int q = a; q < b; ++q) R.add(q, dorm_exact(q), -1.0);
    }
    f.R = std::move(R);
    return f;
}

std::complex<double> poly_eval(const Poly& p, std::complex<double> z) { return poly::eval(p, z); }

void sort_by_modulus_arg(std::vector<std::complex<double>>& v) {
    std::sort(v.begin(), v.end(), [](const std::complex<double>& x, const std::complex<double>& y) {
        double mx = std::abs(x), my = std::abs(y);
        if (mx != my) return mx < my;
        return std::arg(x) < std::arg(y);
    });
}

double coeff_norm(const Poly& p) {
    double s = 0.0;
    for (double c : p) s += std::abs(c);
    return s;
}

}  // namespace

double DepartureDistribution::alpha_at(int r, int n) const {
    const auto& row = alpha[static_cast<size_t>(r - a)];
    return n < static_cast<int>(row.size()) ? row[static_cast<size_t>(n)] : 0.0;
}
double DepartureDistribution::beta_at(int y, int n) const {
    const auto& row = beta[static_cast<size_t>(y - 1)];
    return n < static_cast<int>(row.size()) ? row[static_cast<size_t>(n)] : 0.0;
}
double DepartureDistribution::gamma_at(int k, int n) const {
    const auto& row = gamma[static_cast<size_t>(k)];
    return n < static_cast<int>(row.size()) ? row[static_cast<size_t>(n)] : 0.0;
}
double DepartureDistribution::alpha_row(int n) const { return row_sum(alpha, n); }
double DepartureDistribution::beta_row(int n) const { return row_sum(beta, n); }
double DepartureDistribution::gamma_row(int n) const { return row_sum(gamma, n); }
double DepartureDistribution::alpha_total() const { return block_sum(alpha); }
double DepartureDistribution::beta_total() const { return block_sum(beta); }
double DepartureDistribution::gamma_total() const { return block_sum(gamma); }
double DepartureDistribution::theta_total() const {
    return std::accumulate(theta.begin(), theta.end(), 0.0);
}

CharacteristicFn characteristic(const ModelSpec& spec) {
    validate(spec);
    AnalyticContext cx(spec);
    CharacteristicFn cf;
    cf.b = spec.b;
    cf.d = cx.D;
    cf.phi = cx.Phi;
    double at_one = poly::eval(cf.d, 1.0);
    if (std::abs(at_one) > 1e-10)
        throw NumericError("characteristic function does not vanish at z=1: " + std::to_string(at_one));
    return cf;
}

RootSet find_roots(const CharacteristicFn& cf, double eps) {
    const int b = cf.b;
    RootSet rs;
    const double dnorm = coeff_norm(cf.d);

    // The b closed-disk roots solve z = w * phi(z)^(1/b) for the b-th roots
    // of unity w; fixed-point iteration then a Newton polish on d.
    Poly dprime = poly::derivative(cf.d);
    std::vector<std::complex<double>> disk;
    for (int j = 0; j < b; ++j) {
        std::complex<double> w = std::polar(1.0, 2.0 * M_PI * j / b);
        std::complex<double> z = 0.5 * w;
        for (int it = 0; it < 20000; ++it) {
            std::complex<double> zn = w * std::pow(poly_eval(cf.phi, z), 1.0 / b);
            if (std::abs(zn - z) < 1e-15) {
                z = zn;
                break;
            }
            z = zn;
        }
        for (int it = 0; it < 200; ++it) {
            std::complex<double> f = poly_eval(cf.d, z);
            std::complex<double> fp = poly_eval(dprime, z);
            std::complex<double> step = f / fp;
            z -= step;
            if (std::abs(step) < 1e-16) break;
        }
        if (std::abs(poly_eval(cf.d, z)) > 1e-10 * dnorm)
            throw NumericError("unit-disk root " + std::to_string(j) + " failed the residual check");
        disk.push_back(z);
    }
    for (size_t i = 0; i < disk.size(); ++i)
        for (size_t j = i + 1; j < disk.size(); ++j)
            if (std::abs(disk[i] - disk[j]) < 1e-8)
                throw NumericError("repeated root detected inside the unit disk");

    bool unit_seen = false;
    for (const auto& z : disk) {
        double m = std::abs(z);
        if (m < 1.0 - eps) {
            rs.interior.push_back(z);
        } else if (std::abs(m - 1.0) <= eps) {
            if (std::abs(z - std::complex<double>(1.0, 0.0)) > eps)
                throw NumericError("near-degenerate root on the unit circle away from z=1; "
                                   "perturb the model parameters");
            rs.unit = z;
            unit_seen = true;
        } else {
            throw NumericError("fixed-point root left the unit disk");
        }
    }
    if (!unit_seen || static_cast<int>(rs.interior.size()) != b - 1) {
        std::ostringstream os;
        os << "interior root count " << rs.interior.size() << " != b-1 = " << (b - 1) << "; moduli:";
        for (const auto& z : disk) os << " " << std::abs(z);
        throw NumericError(os.str());
    }
    sort_by_modulus_arg(rs.interior);

    // Full exterior set via companion eigenvalues when the trimmed degree is
    // moderate; otherwise just the tail-governing dominant real root.
    Poly trimmed = cf.d;
    double mx = 0.0;
    for (double c : trimmed) mx = std::max(mx, std::abs(c));
    while (trimmed.size() > 1 && std::abs(trimmed.back()) < 1e-13 * mx) trimmed.pop_back();
    int deg = static_cast<int>(trimmed.size()) - 1;
    if (deg >= 1 && deg <= 160) {
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
        for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
        for (int i = 0; i < deg; ++i)
            companion(i, deg - 1) = -trimmed[static_cast<size_t>(i)] / trimmed.back();
        Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            std::complex<double> z = es.eigenvalues()[i];
            for (int it = 0; it < 100; ++it) {
                std::complex<double> f = poly_eval(cf.d, z);
                std::complex<double> fp = poly_eval(dprime, z);
                if (std::abs(fp) == 0.0) break;
                std::complex<double> step = f / fp;
                z -= step;
                if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
            }
            if (std::abs(z) > 1.0 + eps) {
                double scale = dnorm * std::pow(std::max(1.0, std::abs(z)), deg);
                if (std::abs(poly_eval(cf.d, z)) <= 1e-10 * scale) rs.exterior.push_back(z);
            }
        }
        sort_by_modulus_arg(rs.exterior);
        // Drop near-duplicates produced by polishing.
        std::vector<std::complex<double>> dedup;
        for (const auto& z : rs.exterior) {
            bool dup = false;
            for (const auto& w : dedup)
                if (std::abs(z - w) < 1e-9 * std::max(1.0, std::abs(z))) dup = true;
            if (!dup) dedup.push_back(z);
        }
        rs.exterior = std::move(dedup);
        rs.exterior_complete = true;
    }

    // Dominant real root > 1 by bracketing; replaces or confirms the head of
    // the exterior list (for non-negative series the radius of convergence is
    // attained on the positive real axis).
    {
        double z = 1.0 + 1e-9, prev = z;
        double dz = 1e-3;
        bool found = false;
        while (z < 1e6) {
            prev = z;
            z += dz;
            dz *= 1.3;
            if (poly::eval(cf.d, z) < 0.0) {
                found = true;
                break;
            }
        }
        if (found) {
            double lo = prev, hi = z;
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (lo + hi);
                (poly::eval(cf.d, mid) > 0.0 ? lo : hi) = mid;
            }
            double root = 0.5 * (lo + hi);
            for (int it = 0; it < 100; ++it) {
                double f = poly::eval(cf.d, root);
                double fp = poly::eval_derivative(cf.d, root);
                double step = f / fp;
                root -= step;
                if (std::abs(step) < 1e-15 * root) break;
            }
            if (rs.exterior.empty() || root < std::abs(rs.exterior.front()) - 1e-9 * root)
                rs.exterior.insert(rs.exterior.begin(), root);
        }
    }
    return rs;
}

namespace {

struct BoundarySolve {
    std::vector<double> s;
    BoundaryForms forms;
    RootSet roots;
};

BoundarySolve solve_boundary_impl(const AnalyticContext& cx, const CharacteristicFn& cf,
                                  const SolverOptions& opts) {
    const int a = cx.a, b = cx.b;
    BoundarySolve out;
    out.roots = find_roots(cf, opts.root_eps);
    out.forms = build_forms(cx);
    const auto& R = out.forms.R;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(b, b);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(b);
    int row = 0;
    for (size_t i = 0; i < out.roots.interior.size(); ++i) {
        std::complex<double> z = out.roots.interior[i];
        if (std::abs(z.imag()) < 1e-12) {
            A.row(row++) = R.eval(z).real();
        } else if (z.imag() > 0.0) {  // one equation pair per conjugate pair
            Eigen::RowVectorXcd v = R.eval(z);
            A.row(row++) = v.real();
            A.row(row++) = v.imag();
        }
    }
    if (row != b - 1) throw NumericError("boundary system assembly lost a root equation");

    // Normalization: total completion-epoch mass is 1.
    //   sum_m Pi_m(1) (2 - chi_{m,0}) + sum_k I_k = 1,
    // with Pi_b(1) = (K^b(1) R'(1) + (K^b)'(1) R(1)) / D'(1).
    double dp1 = poly::eval_derivative(cx.D, 1.0);
    const auto& kb = cx.k_series(b);
    double kb1 = 0.0, kbp1 = 0.0;
    for (size_t i = 0; i < kb.coeffs.size(); ++i) {
        kb1 += kb.coeffs[i];
        kbp1 += static_cast<double>(i) * kb.coeffs[i];
    }
    Eigen::RowVectorXd pib1 = (kbp1 * R.sum() + kb1 * R.derivative_at_one()) / dp1;
    Eigen::RowVectorXd norm = pib1 * (2.0 - sos_join_prob(b, 0, cx.p));
    for (int m = a; m < b; ++m)
        norm += out.forms.fes_inflow[static_cast<size_t>(m - a)] * (2.0 - sos_join_prob(m, 0, cx.p));
    for (int k = 0; k < a; ++k) norm += out.forms.inflow[static_cast<size_t>(k)];
    A.row(b - 1) = norm;
    rhs(b - 1) = 1.0;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    double cond = svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
    if (!std::isfinite(cond) || cond > 1e12)
        throw NumericError("boundary system is ill-conditioned (cond ~ " + std::to_string(cond) + ")");

    Eigen::VectorXd sv = A.colPivHouseholderQr().solve(rhs);
    double resid = (A * sv - rhs).norm() / std::max(1.0, rhs.norm());
    if (resid > 1e-9) throw NumericError("boundary solve residual " + std::to_string(resid));
    for (int i = 0; i < b; ++i) {
        if (sv(i) < -1e-9)
            throw NumericError(
                "negative boundary constant at level " + std::to_string(i) +
                "; the analytic reduction disagrees with this model - run the truncated-chain "
                "engine to arbitrate");
        if (sv(i) < 0.0) sv(i) = 0.0;
    }
    out.s.assign(sv.data(), sv.data() + b);
    return out;
}

DepartureDistribution extract_impl(const AnalyticContext& cx, const BoundarySolve& bs,
                                   const SolverOptions& opts) {
    const int a = cx.a, b = cx.b;
    Eigen::Map<const Eigen::VectorXd> S(bs.s.data(), b);

    // Numeric numerator N1 = K^b * R and its deflation by (z-1) and the
    // interior roots; the remaining denominator has only exterior roots so
    // the forward recurrence is stable.
    Eigen::VectorXd rnum_v = bs.forms.R.c * S;
    Poly rnum(rnum_v.data(), rnum_v.data() + rnum_v.size());
    double rnorm = coeff_norm(rnum);
    double r_at_1 = poly::eval(rnum, 1.0);
    if (std::abs(r_at_1) > 1e-9 * std::max(1.0, rnorm))
        throw NumericError("numerator does not vanish at z=1 (flow balance violated): " +
                           std::to_string(r_at_1));
    Poly n1 = poly::mul(cx.k_series(b).coeffs, rnum);
    Poly nd = poly::deflate_root(n1, 1.0);
    Poly dd = poly::deflate_root(cx.D, 1.0);
    for (const auto& z : bs.roots.interior) {
        if (std::abs(z.imag()) < 1e-12) {
            nd = poly::deflate_root(nd, z.real());
            dd = poly::deflate_root(dd, z.real());
        } else if (z.imag() > 0.0) {
            nd = poly::deflate_conjugate_pair(nd, z.real(), z.imag());
            dd = poly::deflate_conjugate_pair(dd, z.real(), z.imag());
        }
    }
    if (dd.empty() || dd.front() == 0.0) throw NumericError("degenerate deflated denominator");

    const double xter = bs.roots.min_exterior_modulus();
    const double rate = xter > 0.0 ? 1.0 / xter : 0.0;

    DepartureDistribution dep;
    dep.a = a;
    dep.b = b;
    dep.tail_rate = rate;

    // alpha for r < b: flat inflow times the arrival-count profile.
    std::vector<double> jm0;
    for (int m = a; m < b; ++m) jm0.push_back(bs.forms.fes_inflow[static_cast<size_t>(m - a)].dot(S));

    // Forward recurrence for the size-b series, run until the certified
    // geometric remainder falls below the target.
    std::vector<double> cb;
    cb.reserve(1024);
    const double d0 = dd.front();
    int n = 0;
    int min_terms = static_cast<int>(nd.size()) + b + 2;
    for (int k = 0; k < a; ++k)
        min_terms = std::max(min_terms, a + static_cast<int>(cx.h_series(k).coeffs.size()));
    while (true) {
        double s = n < static_cast<int>(nd.size()) ? nd[static_cast<size_t>(n)] : 0.0;
        int jmax = std::min<int>(n, static_cast<int>(dd.size()) - 1);
        for (int j = 1; j <= jmax; ++j) s -= dd[static_cast<size_t>(j)] * cb[static_cast<size_t>(n - j)];
        cb.push_back(s / d0);
        ++n;
        if (n < min_terms) continue;
        if (n >= opts.max_terms) break;
        double last = std::abs(cb.back());
        if (rate > 0.0) {
            double bound = last * rate / (1.0 - rate);
            if (bound < opts.tail_bound) break;
        } else if (last < 1e-30) {
            break;
        }
    }
    const int N = n - 1;
    dep.truncation = N;
    double alpha_b_rem = (rate > 0.0) ? std::abs(cb.back()) * rate / (1.0 - rate) : 0.0;

    auto clip = [&dep](double v) {
        if (v < 0.0) {
            if (v < -1e-12)
                throw NumericError("extraction produced a negative probability " + std::to_string(v));
            ++dep.clipped_negative;
            return 0.0;
        }
        return v;
    };

    dep.alpha.assign(static_cast<size_t>(b - a + 1), std::vector<double>(static_cast<size_t>(N) + 1, 0.0));
    for (int m = a; m < b; ++m) {
        const auto& k = cx.k_series(m).coeffs;
        for (int i = 0; i < std::min<int>(N + 1, static_cast<int>(k.size())); ++i)
            dep.alpha[static_cast<size_t>(m - a)][static_cast<size_t>(i)] =
                clip(jm0[static_cast<size_t>(m - a)] * k[static_cast<size_t>(i)]);
    }
    for (int i = 0; i <= N; ++i)
        dep.alpha[static_cast<size_t>(b - a)][static_cast<size_t>(i)] = clip(cb[static_cast<size_t>(i)]);

    // beta: thinning of the alpha series convolved with the SOS arrival law.
    dep.beta.assign(static_cast<size_t>(b), std::vector<double>(static_cast<size_t>(N) + 1, 0.0));
    for (int y = 1; y <= b; ++y) {
        auto& row = dep.beta[static_cast<size_t>(y - 1)];
        const auto& t = cx.t_series(y).coeffs;
        for (int m = std::max(a, y); m <= b; ++m) {
            double w = sos_join_prob(m, y, cx.p);
            if (w == 0.0) continue;
            const auto& am = dep.alpha[static_cast<size_t>(m - a)];
            for (int d = 0; d < static_cast<int>(t.size()); ++d) {
                double tw = w * t[static_cast<size_t>(d)];
                if (tw == 0.0) continue;
                for (int q = 0; q + d <= N; ++q) row[static_cast<size_t>(q + d)] += tw * am[static_cast<size_t>(q)];
            }
        }
    }

    // gamma: vacation starts of type k (inflow I_k) spread by the vacation
    // arrival law.
    dep.gamma.assign(static_cast<size_t>(a), std::vector<double>(static_cast<size_t>(N) + 1, 0.0));
    for (int k = 0; k < a; ++k) {
        double ik = bs.forms.inflow[static_cast<size_t>(k)].dot(S);
        const auto& h = cx.h_series(k).coeffs;
        for (int i = 0; i < static_cast<int>(h.size()) && k + i <= N; ++i)
            dep.gamma[static_cast<size_t>(k)][static_cast<size_t>(k + i)] = clip(ik * h[static_cast<size_t>(i)]);
    }

    // Tail certificate: the alpha_b remainder plus its images through the
    // thinning convolutions (total SOS weight <= 1 per batch) and pmf defects.
    dep.tail_mass_bound = alpha_b_rem * 2.0 + 1e-14;

    // Dormant occupancy (arbitrary-epoch scale) and the normalization
    // constants needed for it.
    NormalizationConstants nc = tau_lambda(cx.spec, dep);
    dep.theta.assign(static_cast<size_t>(a), 0.0);
    if (!cx.spec.multiple()) {
        for (int nq = 0; nq < a; ++nq) {
            double s = 0.0;
            for (int m = 0; m <= nq; ++m) s += cx.u.e(nq, m) * dep.gamma_row(m);
            dep.theta[static_cast<size_t>(nq)] = s / nc.e_star;
        }
    }
    return dep;
}

}  // namespace

std::vector<double> solve_boundary(const ModelSpec& spec, const SolverOptions& opts) {
    validate(spec);
    AnalyticContext cx(spec);
    CharacteristicFn cf{spec.b, cx.D, cx.Phi};
    return solve_boundary_impl(cx, cf, opts).s;
}

DepartureDistribution extract_departure(const ModelSpec& spec, const std::vector<double>& boundary,
                                        const SolverOptions& opts) {
    validate(spec);
    AnalyticContext cx(spec);
    CharacteristicFn cf{spec.b, cx.D, cx.Phi};
    BoundarySolve bs = solve_boundary_impl(cx, cf, opts);
    bs.s = boundary;
    return extract_impl(cx, bs, opts);
}

NormalizationConstants tau_lambda(const ModelSpec& spec, const DepartureDistribution& dep) {
    const int a = spec.a, b = spec.b;
    AnalyticContext cx(spec);
    NormalizationConstants nc;

    std::vector<double> sbar, sobar, vbar;
    for (int r = a; r <= b; ++r) sbar.push_back(spec.fes_at(r).mean());
    for (int y = 1; y <= b; ++y) sobar.push_back(spec.sos_at(y).mean());
    for (int k = 0; k < a; ++k) vbar.push_back(spec.vacation_at(k).mean());
    const double delta = spec.multiple() ? 1.0 : 0.0;
    const int gmax = spec.group_size.max_value();

    double lam_sum = 0.0;
    for (int n = 0; n <= dep.truncation; ++n) {
        double gn = dep.gamma_row(n);
        double bn = dep.beta_row(n);
        if (n < a) {
            if (delta == 0.0) {
                double w = 0.0;
                for (int j = n; j < a; ++j) {
                    double inner = 0.0;
                    for (int l = a; l <= b; ++l) inner += spec.group_size.at(l - j) * sbar[static_cast<size_t>(l - a)];
                    for (int l = b + 1; l <= j + gmax; ++l)
                        inner += spec.group_size.at(l - j) * sbar[static_cast<size_t>(b - a)];
                    w += cx.u.e(j, n) * inner;
                }
                lam_sum += gn * w;
            } else {
                lam_sum += gn * vbar[static_cast<size_t>(n)];
            }
            double a_chi0 = 0.0, a_sos = 0.0;
            for (int r = a; r <= b; ++r) {
                double ar = dep.alpha_at(r, n);
                if (ar == 0.0) continue;
                a_chi0 += ar * sos_join_prob(r, 0, spec.p_sos);
                for (int m = 1; m <= r; ++m)
                    a_sos += ar * sos_join_prob(r, m, spec.p_sos) * sobar[static_cast<size_t>(m - 1)];
            }
            lam_sum += (a_chi0 + bn) * vbar[static_cast<size_t>(n)] + a_sos;
        } else {
            double sb = sbar[static_cast<size_t>(std::min(n, b) - a)];
            lam_sum += (gn + bn) * sb;
            for (int r = a; r <= b; ++r) {
                double ar = dep.alpha_at(r, n);
                if (ar == 0.0) continue;
                double w = sos_join_prob(r, 0, spec.p_sos) * sb;
                for (int m = 1; m <= r; ++m)
                    w += sos_join_prob(r, m, spec.p_sos) * sobar[static_cast<size_t>(m - 1)];
                lam_sum += ar * w;
            }
        }
    }
    nc.big_lambda = lam_sum;

    double esum = 0.0;
    if (delta == 0.0)
        for (int j = 0; j < a; ++j)
            for (int m = 0; m <= j; ++m) esum += cx.u.e(j, m) * dep.gamma_row(m);
    nc.e_star = spec.lambda * nc.big_lambda + esum;

    double theta_sum = (delta == 0.0) ? esum / nc.e_star : 0.0;
    nc.tau = (1.0 - theta_sum) / nc.big_lambda;
    if (!(nc.tau > 0.0) || !(nc.big_lambda > 0.0) || !(nc.e_star > 0.0))
        throw NumericError("non-positive normalization constant");
    double alt = spec.lambda / nc.e_star;
    if (std::abs(alt - nc.tau) > 1e-8 * nc.tau)
        throw NumericError("normalization constants are internally inconsistent");
    return nc;
}

AnalyticSolution solve_analytic(const ModelSpec& spec, const SolverOptions& opts) {
    validate(spec);
    AnalyticContext cx(spec);
    AnalyticSolution sol;
    sol.cf = CharacteristicFn{spec.b, cx.D, cx.Phi};
    BoundarySolve bs = solve_boundary_impl(cx, sol.cf, opts);
    sol.roots = bs.roots;
    sol.boundary = bs.s;
    sol.departure = extract_impl(cx, bs, opts);
    sol.constants = tau_lambda(spec, sol.departure);
    return sol;
}

}  // namespace batchvac
