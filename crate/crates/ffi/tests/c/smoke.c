#include <math.h>
#include <stdio.h>
#include "distortion.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        DistortionStatus s_ = (call);                                      \
        if (s_ != DISTORTION_STATUS_OK) {                                  \
            char msg_[256];                                                \
            distortion_last_error(msg_, sizeof msg_);                      \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_, msg_); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    DistortionMesh *mesh = NULL;
    CHECK(distortion_mesh_triangulate("rect:1:1", 0.25, &mesh));
    size_t n = distortion_mesh_vertex_count(mesh);
    double xy[2 * 64];
    if (n > 64) return 1;
    CHECK(distortion_mesh_vertices(mesh, xy, n));
    for (size_t i = 0; i < n; i++) xy[2 * i] *= 2.0;

    DistortionMap *map = NULL;
    CHECK(distortion_map_new(mesh, xy, n, &map));
    double e = 0.0;
    CHECK(distortion_map_energy(map, DISTORTION_FUNCTIONAL_MEAN_DISTORTION, 2.0, &e));
    /* K = 5/4 for a stretch by 2; area 1 */
    if (fabs(e - 1.5625) > 1e-12) {
        fprintf(stderr, "energy %.17g\n", e);
        return 1;
    }
    if (distortion_mesh_new(NULL, 0, NULL, 0, NULL, 0, &mesh) != DISTORTION_STATUS_NULL_POINTER) return 1;
    distortion_map_free(map);
    distortion_mesh_free(mesh);
    printf("ok %s\n", distortion_version());
    return 0;
}
