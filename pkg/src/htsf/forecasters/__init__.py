"""Base model families: exponential smoothing, ARIMA, and boosted trees."""

from .arima import (
    ARIMA_SCHEMA,
    ArimaError,
    ArimaModel,
    arima_fit,
    arima_forecast,
    arima_from_dict,
    arima_to_dict,
    load_arima,
    save_arima,
)
from .gbdt import (
    GBDT_SCHEMA,
    GbdtError,
    GbdtModel,
    GbdtParams,
    Tree,
    bin_features,
    fit_gbdt,
    gbdt_from_dict,
    gbdt_to_dict,
    load_gbdt,
    predict_gbdt,
    save_gbdt,
)
from .ses import (
    SES_SCHEMA,
    SesError,
    SesParams,
    load_ses,
    save_ses,
    ses_fit,
    ses_forecast,
    ses_from_dict,
    ses_to_dict,
)
from .tweedie import TweedieError, tweedie_grad_hess, tweedie_loss

__all__ = [
    "ARIMA_SCHEMA",
    "ArimaError",
    "ArimaModel",
    "arima_fit",
    "arima_forecast",
    "arima_from_dict",
    "arima_to_dict",
    "load_arima",
    "save_arima",
    "GBDT_SCHEMA",
    "GbdtError",
    "GbdtModel",
    "GbdtParams",
    "Tree",
    "bin_features",
    "fit_gbdt",
    "gbdt_from_dict",
    "gbdt_to_dict",
    "load_gbdt",
    "predict_gbdt",
    "save_gbdt",
    "SES_SCHEMA",
    "SesError",
    "SesParams",
    "load_ses",
    "save_ses",
    "ses_fit",
    "ses_forecast",
    "ses_from_dict",
    "ses_to_dict",
    "TweedieError",
    "tweedie_grad_hess",
    "tweedie_loss",
]
