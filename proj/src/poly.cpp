#include "batchvac/poly.hpp"

#include <algorithm>
#include <cmath>

namespace batchvac::poly {

Poly mul(const Poly& a, const Poly& b) {
    if (a.empty() || b.empty()) return {};
    Poly c(a.size() + b.size() - 1, 0.0);
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        for (size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    }
    return c;
}

void add_scaled(Poly& acc, const Poly& a, double s) {
    if (acc.size() < a.size()) acc.resize(a.size(), 0.0);
    for (size_t i = 0; i < a.size(); ++i) acc[i] += s * a[i];
}

Poly derivative(const Poly& a) {
    if (a.size() <= 1) return {};
    Poly d(a.size() - 1);
    for (size_t i = 1; i < a.size(); ++i) d[i - 1] = static_cast<double>(i) * a[i];
    return d;
}

void trim(Poly& a) {
    while (!a.empty() && a.back() == 0.0) a.pop_back();
}

double eval(const Poly& a, double z) {
    double acc = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * z + *it;
    return acc;
}

std::complex<double> eval(const Poly& a, std::complex<double> z) {
    std::complex<double> acc = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * z + *it;
    return acc;
}

double eval_derivative(const Poly& a, double z) {
    double acc = 0.0;
    for (size_t k = a.size(); k-- > 1;) acc = acc * z + static_cast<double>(k) * a[k];
    return acc;
}

Poly deflate_root(const Poly& a, double r) {
    if (a.size() <= 1) return {};
    // Descending-order synthetic division.
    Poly q(a.size() - 1, 0.0);
    double carry = a.back();
    for (size_t i = a.size() - 1; i-- > 0;) {
        q[i] = carry;
        carry = a[i] + carry * r;
    }
    return q;
}

Poly deflate_conjugate_pair(const Poly& a, double re, double im) {
    if (a.size() <= 2) return {};
    const double s = 2.0 * re;
    const double p2 = re * re + im * im;
    const size_t n = a.size();
    Poly q(n - 2, 0.0);
    double b1 = 0.0, b2 = 0.0;
    for (size_t i = 0; i < n - 2; ++i) {
        // coefficients consumed from the highest power down
        double t = a[n - 1 - i] + s * b1 - p2 * b2;
        q[n - 3 - i] = t;
        b2 = b1;
        b1 = t;
    }
    return q;
}

}  // namespace batchvac::poly
