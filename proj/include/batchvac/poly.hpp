#pragma once

#include <complex>
#include <vector>

namespace batchvac {

/// Real polynomial in ascending powers. Canonical form keeps the trailing
/// coefficient non-zero (the zero polynomial is the empty vector).
using Poly = std::vector<double>;

namespace poly {

Poly mul(const Poly& a, const Poly& b);
void add_scaled(Poly& acc, const Poly& a, double s);  // acc += s*a, resizing
Poly derivative(const Poly& a);
void trim(Poly& a);

double eval(const Poly& a, double z);
std::complex<double> eval(const Poly& a, std::complex<double> z);
double eval_derivative(const Poly& a, double z);

/// Synthetic division by (z - r); returns the quotient, drops the remainder.
Poly deflate_root(const Poly& a, double r);
/// Division by z^2 - 2*re*z + (re^2+im^2), i.e. a conjugate root pair.
Poly deflate_conjugate_pair(const Poly& a, double re, double im);

}  // namespace poly
}  // namespace batchvac
