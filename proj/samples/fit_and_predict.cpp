// Fits MAE and MAPE models on a = 0.5 sinc data and compares their test MAPE.

#include <iostream>

#include "mapereg/mapereg.hpp"

int main() {
    using namespace mapereg;
    const Dataset train = generate_dataset(0.5, 300, 1);
    const Dataset test = generate_dataset(0.5, 300, 2);
    const KernelSpec kernel = KernelSpec::gaussian(10.0);

    for (const LossSpec& loss : {LossSpec::mae(), LossSpec::mape()}) {
        const CvReport cv = cross_validate(train, loss, kernel, default_c_grid(), 5, 3);
        const TrainedModel model = fit(train, loss, kernel, cv.best_C);
        const Vector pred = predict(model, test.X);
        std::cout << to_string(loss.kind) << " fit: C = " << cv.best_C
                  << ", test MAPE = " << mape_percent(pred, test.y) << "%\n";
    }
}
