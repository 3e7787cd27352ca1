// Times the serial reference kernels against the OpenMP versions on the
// matrix shapes the trainer actually hits, plus a full forward/backward step.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "pcglab/kernels.hpp"
#include "pcglab/model.hpp"
#include "pcglab/rng.hpp"

using namespace pcglab;

namespace {

using Clock = std::chrono::steady_clock;

double time_of(int iters, const std::function<void()>& fn) {
    fn(); // warm
    const auto t0 = Clock::now();
    for (int i = 0; i < iters; ++i) fn();
    return std::chrono::duration<double>(Clock::now() - t0).count() / iters;
}

void bench_matmul(const char* name, int M, int K, int N, int threads) {
    std::vector<float> A(static_cast<size_t>(M) * K), B(static_cast<size_t>(K) * N),
        C(static_cast<size_t>(M) * N);
    Rng rng(7);
    for (auto& x : A) x = static_cast<float>(rng.next_normal());
    for (auto& x : B) x = static_cast<float>(rng.next_normal());
    const double flops = 2.0 * M * K * N;
    const int iters = flops > 5e8 ? 5 : 50;

    const double t_serial =
        time_of(iters, [&] { kernels::serial::matmul_nn(C.data(), A.data(), B.data(), M, K, N); });
    kernels::set_threads(threads);
    const double t_par =
        time_of(iters, [&] { kernels::par::matmul_nn(C.data(), A.data(), B.data(), M, K, N); });
    std::printf("%-24s %5dx%4dx%4d  serial %8.2f ms (%6.1f GF/s)  omp %8.2f ms (%6.1f GF/s)  x%.2f\n",
                name, M, K, N, 1e3 * t_serial, flops / t_serial / 1e9, 1e3 * t_par,
                flops / t_par / 1e9, t_serial / t_par);
}

void bench_train_step(int threads) {
    ModelConfig cfg;
    cfg.n_layers = 2;
    cfg.n_heads = 4;
    cfg.d_model = 256;
    cfg.vocab = 64;
    cfg.context = 128;
    auto params = init_params<float>(cfg, 1);
    auto grads = alloc_params<float>(cfg);
    Workspace<float> ws;
    const int B = 64, L = 128;
    std::vector<int> tokens(static_cast<size_t>(B) * L), targets(tokens.size());
    Rng rng(3);
    for (auto& t : tokens) t = static_cast<int>(rng.next_below(cfg.vocab));
    for (auto& t : targets) t = static_cast<int>(rng.next_below(cfg.vocab));

    auto step = [&] {
        forward(params, tokens.data(), B, L, ws);
        cross_entropy(ws, targets.data());
        backward(params, tokens.data(), targets.data(), B, L, ws, grads);
    };
    kernels::set_threads(1);
    const double t_serial = time_of(2, step);
    kernels::set_threads(threads);
    const double t_par = time_of(2, step);
    std::printf("%-24s B=%d L=%d d=%d      serial %8.2f ms                 omp %8.2f ms                 x%.2f\n",
                "train step (fwd+bwd)", B, L, cfg.d_model, 1e3 * t_serial, 1e3 * t_par,
                t_serial / t_par);
}

} // namespace

int main(int argc, char** argv) {
    const int threads = argc > 1 ? std::atoi(argv[1]) : kernels::threads();
    std::printf("benchmarking with %d thread(s)\n", threads);
    bench_matmul("proj (qkvo)", 8192, 256, 256, threads);
    bench_matmul("mlp in", 8192, 256, 1024, threads);
    bench_matmul("mlp out", 8192, 1024, 256, threads);
    bench_matmul("small batch", 512, 256, 256, threads);
    bench_train_step(threads);
    return 0;
}
