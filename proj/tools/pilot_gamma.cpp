// Coarse bandwidth pilot behind kDefaultSimulationGamma: cross-validated MAPE
// of the MAPE fit on a = 1 training data for each gamma in {0.1, 1, 10}.
//
//   pilot_gamma [seed]

#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <string>

#include "mapereg/simulation.hpp"

int main(int argc, char** argv) {
    using namespace mapereg;
    const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 42;
    SimConfig config;
    config.seed = seed;
    const double a = 1.0;
    const std::uint64_t base = row_seed(seed, a);
    const Dataset train =
        generate_dataset(a, config.n_train, derive_seed(base, static_cast<std::uint64_t>(RowStream::Train)));
    const std::uint64_t fold_seed = derive_seed(base, static_cast<std::uint64_t>(RowStream::Folds));

    std::cout << "gamma,best_C,cv_mape\n" << std::setprecision(6);
    double best_gamma = 0.0;
    double best_score = 0.0;
    for (double gamma : {0.1, 1.0, 10.0}) {
        const CvReport cv = cross_validate(train, LossSpec::mape(), KernelSpec::gaussian(gamma), config.c_grid,
                                           config.folds, fold_seed, config.fit);
        const double score = cv.mean_scores[cv.best_index];
        std::cout << gamma << ',' << cv.best_C << ',' << score << std::endl;
        if (best_gamma == 0.0 || score < best_score) {
            best_gamma = gamma;
            best_score = score;
        }
    }
    std::cout << "selected gamma " << best_gamma << '\n';
    return EXIT_SUCCESS;
}
