// Decomposes a random one-form on the unit disk with the weight |x| and
// prints the reconstruction residuals and the gap estimate.

#include <cstdio>

#include "wel/wel.hpp"

int main() {
    using namespace wel;
    const GridPtr grid = build_disk({0.0, 0.0}, 1.0, resolution_for_cells(64));
    const Weight w = power_product_weight({{0.0, 0.0}}, {1.0}, grid);
    const OneForm A = random_one_form(grid, 42, 3, 3, &w);

    const DecompositionResult r = decompose(A, w, 0.5);
    std::printf("|A| = %.6e   |omega A| = %.6e\n", r.norm_A, r.norm_omega_A);
    std::printf("residual (unweighted) = %.3e\n", r.unweighted.residual);
    std::printf("residual (weighted)   = %.3e\n", r.weighted.residual);
    std::printf("gap: lhs = %.6e  bound = %.6e  (%s)\n", r.gap.lhs, r.gap.end_to_end_bound,
                to_string(r.gap.end_to_end));
    return 0;
}
