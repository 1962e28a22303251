#include <math.h>
#include <stdio.h>

#include "whittle.h"

int main(void) {
    WhittleModel *model = NULL;
    const char *json = "{\"model\":\"matern\",\"params\":{\"phi\":10.0,\"nu\":0.4,\"alpha\":0.05}}";
    if (whittle_model_from_json(json, &model) != WHITTLE_STATUS_OK) return 1;

    WhittleSeries *series = NULL;
    if (whittle_simulate(model, 512, 1.0, 11, 0, &series) != WHITTLE_STATUS_OK) return 2;

    WhittleObjective *obj = NULL;
    if (whittle_objective_new(series, "matern", "blurred", NULL, 1.0, false, &obj) != WHITTLE_STATUS_OK) return 3;

    WhittleFit *fit = NULL;
    WhittleStatus st = whittle_fit(obj, &fit);
    if (st != WHITTLE_STATUS_OK && st != WHITTLE_STATUS_NOT_CONVERGED) return 4;

    double theta[3], se[3];
    if (whittle_fit_theta(fit, theta, se, 3) != WHITTLE_STATUS_OK) return 5;
    printf("%g %g %g\n", theta[0], theta[1], theta[2]);

    if (whittle_model_from_json("not json", &model) == WHITTLE_STATUS_OK) return 6;
    if (whittle_last_error() == NULL) return 7;

    whittle_fit_free(fit);
    whittle_objective_free(obj);
    whittle_series_free(series);
    whittle_model_free(model);
    return isfinite(theta[0]) ? 0 : 8;
}
