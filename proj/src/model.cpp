#include "batchvac/model.hpp"

#include <cmath>
#include <sstream>

#include "batchvac/errors.hpp"

namespace batchvac {

double sos_join_prob(int r, int y, double p) {
    if (y < 0 || y > r) throw ConfigError("sos join count out of range");
    // Multiplicative binomial evaluation; exact symmetry under (p,y) <-> (1-p,r-y).
    double coef = 1.0;
    int k = std::min(y, r - y);
    for (int i = 1; i <= k; ++i) coef = coef * static_cast<double>(r - k + i) / static_cast<double>(i);
    double a = (y == 0) ? 1.0 : std::pow(p, y);
    double b = (r - y == 0) ? 1.0 : std::pow(1.0 - p, r - y);
    return coef * a * b;
}

std::vector<std::vector<double>> sos_join_matrix(const ModelSpec& spec) {
    std::vector<std::vector<double>> chi;
    for (int r = spec.a; r <= spec.b; ++r) {
        std::vector<double> row(static_cast<size_t>(r) + 1);
        for (int y = 0; y <= r; ++y) row[static_cast<size_t>(y)] = sos_join_prob(r, y, spec.p_sos);
        chi.push_back(std::move(row));
    }
    return chi;
}

double traffic_intensity(const ModelSpec& spec) {
    double sos_term = 0.0;
    for (int y = 1; y <= spec.b; ++y)
        sos_term += sos_join_prob(spec.b, y, spec.p_sos) * spec.sos_at(y).mean();
    double work = spec.fes_at(spec.b).mean() + sos_term;
    return spec.lambda * spec.group_mean() * work / static_cast<double>(spec.b);
}

static void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

void validate(const ModelSpec& spec) {
    require(spec.a >= 1, "minimum service threshold a must be >= 1");
    require(spec.b >= spec.a, "a exceeds b");
    require(spec.lambda > 0.0 && spec.lambda < 1.0, "lambda must be in (0,1)");
    require(spec.p_sos >= 0.0 && spec.p_sos <= 1.0, "p_sos must be in [0,1]");
    spec.group_size.check(1e-9);
    require(spec.group_size.offset >= 1, "group size pmf must have offset >= 1");
    require(spec.group_size.tail_defect == 0.0, "group size pmf must have finite support (no tail defect)");

    auto check_durations = [](const std::map<int, DiscretePmf>& m, int lo, int hi, const char* what) {
        for (int i = lo; i <= hi; ++i) {
            auto it = m.find(i);
            if (it == m.end()) {
                std::ostringstream os;
                os << "missing " << what << " pmf for index " << i;
                throw ConfigError(os.str());
            }
            it->second.check(1e-9);
            if (it->second.offset < 1) {
                std::ostringstream os;
                os << what << " pmf for index " << i << " has a support point at 0";
                throw ConfigError(os.str());
            }
        }
    };
    check_durations(spec.fes, spec.a, spec.b, "fes");
    check_durations(spec.sos, 1, spec.b, "sos");
    check_durations(spec.vacation, 0, spec.a - 1, "vacation");

    double rho = traffic_intensity(spec);
    if (!(rho < 1.0)) {
        std::ostringstream os;
        os << "unstable model: traffic intensity rho = " << rho << " >= 1";
        throw InstabilityError(os.str());
    }
}

}  // namespace batchvac
