#include <stdio.h>
#include <stdlib.h>

#include "fractree.h"

int main(void) {
    FtBranchingTree *tree = NULL;
    if (ft_ct_generate(2, 0.75, FT_PROFILE_GAUSSIAN, 1000, 0.0, 42, &tree) != FT_STATUS_OK) {
        fprintf(stderr, "generate failed: %s\n", ft_last_error_message());
        return 1;
    }
    size_t n = ft_ct_len(tree);
    size_t d = ft_ct_dim(tree);
    double *coords = malloc(n * d * sizeof(double));
    if (ft_ct_coords(tree, coords, n * d) != FT_STATUS_OK) {
        return 1;
    }
    double slope = 0.0;
    if (ft_box_count_dimension(coords, n, (uint32_t)d, &slope, NULL) != FT_STATUS_OK) {
        return 1;
    }
    ft_ct_free(tree);
    free(coords);

    FtPointTree *pts = NULL;
    if (ft_discrete_generate(2, 3.0, 1.0, 10, FT_MODEL_SMOOTH, 1, &pts) != FT_STATUS_INVALID_ARGUMENT) {
        return 1;
    }
    printf("%zu %zu %.3f\n", n, d, slope);
    return 0;
}
