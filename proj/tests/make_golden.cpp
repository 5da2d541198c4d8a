// Regenerates tests/fixtures/golden_{weights,io}.{bin,json}.
// usage: make_golden <fixture dir>

#include <cstdio>
#include <filesystem>

#include "ssd/architecture.hpp"
#include "ssd/random.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <fixture dir>\n", argv[0]);
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);

    ssd::BlockConfig config;  // d=16, H=2, P=16, N=8, w=4, Q=16
    config.chunk = 4;
    const auto weights = ssd::random_block_weights(config, 20240531);
    ssd::Rng rng(8);
    const ssd::Tensor u = rng.normal_tensor({8, config.d_model});
    const ssd::Tensor out = ssd::mamba2_block_forward(weights, u);

    auto recurrent = weights;
    recurrent.config.inner = ssd::BlockConfig::Inner::recurrent;
    const double err = ssd::max_rel_err(ssd::mamba2_block_forward(recurrent, u), out);
    std::printf("blocked vs recurrent inner layer: %.3g\n", err);
    if (!(err < 1e-12)) return 1;

    ssd::save_block_weights(dir / "golden_weights", weights);
    ssd::write_bundle(dir / "golden_io", {{"u", u}, {"out", out}});
    std::printf("wrote %s\n", dir.string().c_str());
    return 0;
}
