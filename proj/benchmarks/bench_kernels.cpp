#include <cstdio>
#include <omp.h>

#include "gnc/conv.hpp"
#include "gnc/flow.hpp"
#include "gnc/foe.hpp"
#include "gnc/synth.hpp"
#include "gnc/training.hpp"

// Times the data-parallel kernels against their serial reference paths.
namespace {

using gnc::conv::Exec;

template <typename F>
double time_best(F&& fn, int reps) {
    double best = 1e100;
    for (int r = 0; r < reps; ++r) {
        const double t0 = omp_get_wtime();
        fn();
        best = std::min(best, omp_get_wtime() - t0);
    }
    return best;
}

void report(const char* name, double serial, double parallel) {
    std::printf("%-28s serial %8.2f ms   openmp %8.2f ms   speedup %.2fx\n", name, serial * 1e3,
                parallel * 1e3, serial / parallel);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());

    const gnc::ImageTensor img = gnc::synth::scene(128, 128, 3);
    const gnc::conv::ConvOp dct = gnc::conv::dct_filters();

    gnc::ImageTensor feat;
    report("conv 7x7x48 forward",
           time_best([&] { feat = dct.forward(img, Exec::Serial); }, 5),
           time_best([&] { feat = dct.forward(img, Exec::Parallel); }, 5));
    report("conv 7x7x48 adjoint",
           time_best([&] { dct.adjoint(feat, Exec::Serial); }, 5),
           time_best([&] { dct.adjoint(feat, Exec::Parallel); }, 5));
    report("conv 7x7x48 kernel grad",
           time_best([&] { dct.kernel_grad(img, feat, Exec::Serial); }, 5),
           time_best([&] { dct.kernel_grad(img, feat, Exec::Parallel); }, 5));

    const gnc::foe::FoEModel model = gnc::foe::make_r1(std::log(1e-4), 0.0);
    report("prior grad_x 128x128",
           time_best([&] { gnc::foe::grad_x(model, img, -2.0, Exec::Serial); }, 3),
           time_best([&] { gnc::foe::grad_x(model, img, -2.0, Exec::Parallel); }, 3));

    gnc::train::TrainConfig cfg;
    cfg.patch_size = 32;
    cfg.batch_size = 8;
    gnc::train::PatchCorpus corpus{gnc::synth::corpus(4, 96, 96, 11)};
    gnc::CounterRng rng(0);
    std::vector<gnc::train::TrainingSample> batch;
    for (int i = 0; i < cfg.batch_size; ++i)
        batch.push_back(gnc::train::sample_training_point(corpus, cfg, rng));
    // batch gradients parallelize over samples; compare 1 thread vs all
    const double par = time_best([&] { gnc::train::batch_loss_and_grad(model, cfg, batch); }, 3);
    const int max_threads = omp_get_max_threads();
    omp_set_num_threads(1);
    const double ser = time_best([&] { gnc::train::batch_loss_and_grad(model, cfg, batch); }, 3);
    omp_set_num_threads(max_threads);
    report("batch loss+grad (8x32x32)", ser, par);

    return 0;
}
