/* Compile-only exercise of the generated C API surface. */
#include "toric_obm.h"
#include <stdio.h>

int use_api(const char *fan_json) {
    TobmFan *fan = tobm_fan_parse(fan_json);
    if (!fan) {
        char *msg = tobm_last_error_message();
        fprintf(stderr, "parse failed: %s\n", msg);
        tobm_string_free(msg);
        return TOBM_ERR_PARSE;
    }
    int smooth = tobm_fan_is_smooth(fan);
    char *report = NULL;
    int code = tobm_present(fan, "cobordism", 0, 1, &report);
    if (code == TOBM_OK) {
        printf("smooth=%d report=%s\n", smooth, report);
        tobm_string_free(report);
    }
    TobmFan *resolved = tobm_fan_resolve(fan);
    if (resolved) {
        tobm_fan_free(resolved);
    }
    tobm_fan_free(fan);
    return code;
}
