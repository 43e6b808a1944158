"""Fixed feature schema and CSV layouts.

The 37-column feature order is frozen here; every panel, model input, and
saliency export indexes into this list.  `CATEGORICAL` columns pass through
rolling normalization unscaled.
"""

FEATURE_NAMES = [
    "close",
    "volume",
    "momentum_5d",
    "momentum_20d",
    "momentum_60d",
    "reversal_5d",
    "rsi_14",
    "atr_14",
    "market_cap",
    "book_to_market",
    "beta_mkt_60d",
    "beta_smb_60d",
    "beta_hml_60d",
    "factor_mkt",
    "factor_smb",
    "factor_hml",
    "risk_free",
    "factor_umd",
    "oil",
    "treasury_10y",
    "dollar_index",
    "vix",
    "garch_vol",
    "excess_return",
    "raw_return",
    "spy_return",
    "gsector",
    "gsubind",
    "corr_mkt_10d",
    "corr_mkt_21d",
    "corr_mkt_63d",
    "corr_sector_21d",
    "corr_subind_21d",
    "vol_sector_20d",
    "vol_subind_20d",
    "vol_mkt_10d",
    "dispersion",
]

N_FEATURES = len(FEATURE_NAMES)
assert N_FEATURES == 37

CATEGORICAL = ("gsector", "gsubind")
CATEGORICAL_IDX = tuple(FEATURE_NAMES.index(c) for c in CATEGORICAL)

BARS_COLUMNS = ["date", "ticker", "close", "volume", "gsector", "gsubind",
                "shares_outstanding", "book_value"]
MACRO_COLUMNS = ["date", "oil", "dgs10", "dollar", "vix", "rf", "mkt", "smb",
                 "hml", "umd", "spy_ret"]

# History needed before a feature row is fully defined: the 63-day rolling
# correlation plus the 60-day normalization window (and one return lag).
MIN_HISTORY_DAYS = 130
SEQ_LEN = 30
ELIGIBILITY_WINDOW = 33
ELIGIBILITY_MIN_VALID = 30
NORM_WINDOW = 60
