// Trains the two-neuron toy regression from the obstructed and the good initialization
// and prints loss and output-weight signs every 50 steps.

#include <cstdio>

#include "quadricflow/quadricflow.hpp"

int main() {
    using namespace qflow;
    ToyConfig cfg;
    cfg.record_stride = 50;
    const ToyResult r = run_toy(cfg);

    for (const auto& [name, run] : {std::pair{"obstructed", &r.obstructed}, std::pair{"good", &r.good}}) {
        const Vector c = charges(run->init);
        std::printf("%s init: charges (%.3f, %.3f)\n", name, c[0], c[1]);
        for (const auto& rec : run->records) {
            std::printf("  step %4zu  loss %.6f  drift %.2e  signs", rec.step, rec.loss, rec.max_charge_drift);
            for (int s : rec.sign->s) std::printf(" %+d", s);
            std::printf("\n");
        }
    }
    std::printf("final MSE: obstructed %.5f, good %.5f\n", r.obstructed.final_loss(), r.good.final_loss());
}
