#include <math.h>
#include <stdio.h>
#include "porocell.h"

int main(void) {
    PcStack *stack = NULL;
    double tof = 0.0;
    if (pc_stack_reference(&stack) != PC_STATUS_OK) return 1;
    if (pc_stack_tof(stack, &tof) != PC_STATUS_OK) return 2;
    pc_stack_free(stack);
    if (fabs(tof * 1e6 - 20.47) > 0.05) return 3;
    if (pc_stack_tof(NULL, &tof) != PC_STATUS_NULL_POINTER) return 4;
    if (pc_last_error()[0] == '\0') return 5;
    printf("%.2f\n", tof * 1e6);
    return 0;
}
