// Draws a random scalar-output network, reports which component of its invariant set it sits
// in, and moves it to every other sign vector reachable by permutation and rescaling.

#include <algorithm>
#include <cstdio>

#include "quadricflow/quadricflow.hpp"

int main() {
    using namespace qflow;
    Rng rng(3, Stream::probe);
    Params theta;
    do {
        theta = random_params(rng, 3, 1, 5, false);
    } while (signature(theta).l_minus < 3);

    const auto sig = signature(theta);
    const SignVector s = sign_vector(theta, sig);
    std::printf("charges:");
    for (double c : sig.c) std::printf(" %.3f", c);
    std::printf("\nbeta0 = %llu, effective components = %zu\nsign vector:",
                static_cast<unsigned long long>(poincare_polynomial(sig).at(0)), effective_component_count(sig));
    for (int v : s.s) std::printf(" %+d", v);
    std::printf("\n");

    SignVector target = s;
    std::sort(target.s.begin(), target.s.end());
    do {
        const Params moved = map_to_sign(theta, target);
        std::printf("  ->");
        for (int v : sign_vector(moved, sig.zero_tol).s) std::printf(" %+d", v);
        std::printf("   same function: %s\n", observationally_equivalent(theta, moved, 50, 1, 1e-10) ? "yes" : "no");
    } while (std::next_permutation(target.s.begin(), target.s.end()));
}
