#include <cmath>
#include <cstdio>

#include "ortho/bench.hpp"

using namespace ortho;

int main(int argc, char** argv) {
    const std::size_t layers = argc > 1 ? static_cast<std::size_t>(std::atol(argv[1])) : 1;
    for (double lr : {1e-3, 3e-3}) {
        for (std::size_t epochs : {12ul, 20ul}) {
            std::printf("layers=%zu lr=%g epochs=%2zu :", layers, lr, epochs);
            for (std::uint64_t seed : {42ull, 7ull, 99ull}) {
                SyntheticConfig cfg;
                cfg.seed = seed;
                cfg.epochs = epochs;
                cfg.embed_layers = layers;
                cfg.schedule = Schedule{lr, epochs / 2, epochs - epochs / 2};
                double e[3];
                int i = 0;
                for (TrainingArm arm :
                     {TrainingArm::Omlp, TrainingArm::Penalty, TrainingArm::Unconstrained}) {
                    e[i++] = train(cfg, arm).report.offdiag_energy;
                }
                const bool ok = e[0] < e[1] && e[1] < e[2];
                std::printf("  s%llu[%.4f %.4f %.4f]%s", (unsigned long long)seed, e[0], e[1],
                            e[2], ok ? "*" : " ");
            }
            std::printf("\n");
            std::fflush(stdout);
        }
    }
    return 0;
}
