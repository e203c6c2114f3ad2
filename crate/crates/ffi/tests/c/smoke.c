#include <stdio.h>
#include "actattr.h"

int main(void) {
    double w[6] = {0.5, 0.5, 0.0, 0.0, 0.25, 0.75};
    double g[3] = {1.0, 2.0, 4.0};
    double out[2];
    ActattrWeights *h = NULL;
    if (actattr_weights_from_values(2, 3, w, &h) != ACTATTR_STATUS_OK) return 1;
    if (actattr_script_scores(h, g, 3, out, 2) != ACTATTR_STATUS_OK) return 2;
    actattr_weights_free(h);
    if (actattr_weights_from_values(2, 3, NULL, NULL) != ACTATTR_STATUS_NULL_POINTER) return 3;
    if (actattr_last_error()[0] == '\0') return 4;
    printf("%.2f %.2f\n", out[0], out[1]);
    return 0;
}
