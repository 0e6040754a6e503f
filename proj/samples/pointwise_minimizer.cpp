// Best constant prediction under MAPE for a three-atom distribution. The
// objective is flat on [1, 2]; the midpoint is returned.

#include <iostream>
#include <vector>

#include "mapereg/pointwise.hpp"

int main() {
    const std::vector<double> atoms{1.0, 2.0, 3.0};
    const std::vector<double> masses{0.3, 0.4, 0.3};
    const mapereg::DiscreteDistribution t(atoms, masses);
    const auto best = mapereg::pointwise_mape_minimizer(t);
    std::cout << "m* = " << best.m_star << ", J(m*) = " << best.j_star << ", argmin = [" << best.argmin.lower
              << ", " << best.argmin.upper << "]\n";
    for (double m : {0.5, 1.0, 1.5, 2.0, 2.5}) std::cout << "J(" << m << ") = " << mapereg::mape_objective(t, m) << '\n';
}
