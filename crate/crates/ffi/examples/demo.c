#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "eeg_homog.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        EhStatus s_ = (call);                                              \
        if (s_ != EH_STATUS_OK) {                                          \
            fprintf(stderr, "%s -> %d: %s\n", #call, s_, eh_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    enum { C = 4, L = 64, H = 32, W = 32 };
    double data[C * L];
    for (int c = 0; c < C; c++)
        for (int t = 0; t < L; t++)
            data[c * L + t] = (c + 1) * 50.0 * sin(0.2 * t + c);

    EhSample *sample = NULL;
    EhImage *image = NULL;
    EhEdgeMap *edges = NULL;
    EhTensor *tensor = NULL;
    CHECK(eh_sample_new(C, L, data, 0, &sample));
    CHECK(eh_icwmh(sample, H, W, EH_INTERPOLATION_BILINEAR, &image));

    EhEdgeConfig cfg = eh_edge_config_default();
    CHECK(eh_detect_edges(image, &cfg, &edges));
    CHECK(eh_assemble(image, edges, &tensor));

    size_t n = eh_tensor_len(tensor);
    double *buf = malloc(n * sizeof *buf);
    CHECK(eh_tensor_copy(tensor, buf, n));
    double sum = 0.0;
    for (size_t i = 0; i < n; i++) sum += buf[i];

    double loss = 0.0;
    double logits[3] = {0.0, 0.0, 0.0};
    CHECK(eh_ce_loss(logits, 3, 1, &loss));

    if (eh_detect_edges(image, NULL, NULL) != EH_STATUS_NULL_POINTER) return 2;

    printf("tensor %zu values, sum %.6f, edges %zu, loss %.12f\n", n, sum, eh_edge_map_count(edges), loss);
    free(buf);
    eh_tensor_free(tensor);
    eh_edge_map_free(edges);
    eh_image_free(image);
    eh_sample_free(sample);
    return 0;
}
