#pragma once

// Shared generators for the property tests.

#include <cmath>
#include <vector>

#include "quadricflow/core_net.hpp"
#include "quadricflow/random.hpp"

namespace qtest {

using namespace qflow;

inline Params make_params(std::vector<std::vector<double>> w1, std::vector<std::vector<double>> w2) {
    Params p;
    p.w1 = Matrix::from_rows(w1);
    p.w2 = Matrix::from_rows(w2);
    return p;
}

inline Params gaussian_params(Rng& rng, std::size_t d, std::size_t e, std::size_t l, bool bias = false,
                              double scale = 1.0) {
    Params p;
    p.w1 = Matrix(l, d);
    p.w2 = Matrix(e, l);
    for (double& w : p.w1.data()) w = scale * rng.normal();
    for (double& w : p.w2.data()) w = scale * rng.normal();
    if (bias) {
        p.b1 = Vector(l);
        p.b2 = Vector(e);
        for (double& b : *p.b1) b = scale * rng.normal();
        for (double& b : *p.b2) b = scale * rng.normal();
    }
    return p;
}

inline Vector gaussian_vector(Rng& rng, std::size_t n) {
    Vector v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace qtest
