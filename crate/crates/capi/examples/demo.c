/* Minimal C consumer: version, LBP code, serial vs parallel extraction,
 * registration round trip. Build (from the repository root, after
 * `cargo build -p rgbd-facekit-capi`):
 *
 *   cc crates/capi/examples/demo.c -Icrates/capi/include \
 *      target/debug/librgbd_facekit_capi.a -lpthread -ldl -lm -o demo
 */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "rgbd_facekit.h"

int main(void) {
    printf("rgbd-facekit %s\n", fk_version());

    const uint16_t window[9] = {6, 5, 2, 7, 6, 1, 9, 8, 7};
    int code = fk_lbp_code(window);
    if (code != 241) {
        fprintf(stderr, "unexpected lbp code %d\n", code);
        return 1;
    }

    /* serial vs 4 workers must agree bit for bit */
    uint8_t roi[64 * 64];
    for (int i = 0; i < 64 * 64; i++) {
        roi[i] = (uint8_t)((i * 131) ^ (i >> 3));
    }
    size_t n = fk_feature_length(1, 1);
    double serial[256];
    double parallel[256];
    if (fk_extract_gray(roi, 64, 64, 1, 1, 0, serial, n) != FK_STATUS_OK) {
        fprintf(stderr, "serial extract: %s\n", fk_last_error());
        return 1;
    }
    if (fk_extract_gray(roi, 64, 64, 1, 1, 4, parallel, n) != FK_STATUS_OK) {
        fprintf(stderr, "parallel extract: %s\n", fk_last_error());
        return 1;
    }
    if (memcmp(serial, parallel, n * sizeof(double)) != 0) {
        fprintf(stderr, "engines disagree\n");
        return 1;
    }

    /* identity calibration maps a face rect onto itself */
    uint16_t depth[64 * 64];
    for (int i = 0; i < 64 * 64; i++) {
        depth[i] = 1000;
    }
    FkCalibration cal = {
        500.0, 500.0, 32.0, 32.0, /* depth intrinsics */
        500.0, 500.0, 32.0, 32.0, /* color intrinsics */
        0.0,   0.0,   0.0,        /* translation */
    };
    FkRect face = {10, 12, 20, 18};
    FkRect out;
    if (fk_face_depth_roi(face, 64, 64, depth, 64, 64, &cal, &out) != FK_STATUS_OK) {
        fprintf(stderr, "roi: %s\n", fk_last_error());
        return 1;
    }
    if (out.x != face.x || out.y != face.y || out.w != face.w || out.h != face.h) {
        fprintf(stderr, "identity roi mismatch\n");
        return 1;
    }

    printf("lbp code 241, engines agree, identity roi holds\n");
    return 0;
}
