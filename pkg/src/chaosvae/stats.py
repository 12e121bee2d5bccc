"""Run aggregation and the two-sample t-test used to compare VAE and C-VAE."""

from dataclasses import dataclass, field
import io
import math

import numpy as np
from scipy.special import betainc

from .errors import InputError, TooFewRuns, ZeroVariance

LEVELS = (0.05, 0.01)


@dataclass
class RunSeries:
    model_tag: str
    dataset_tag: str
    best_cr_per_run: np.ndarray

    def __post_init__(self):
        self.best_cr_per_run = np.asarray(self.best_cr_per_run, dtype=float)
        if np.any((self.best_cr_per_run < 0) | (self.best_cr_per_run > 100)):
            raise InputError("classification rates must lie in [0, 100]")

    def __len__(self):
        return len(self.best_cr_per_run)


@dataclass
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    significant_at: dict = field(default_factory=dict)


def _values(series):
    values = series.best_cr_per_run if isinstance(series, RunSeries) else series
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise TooFewRuns(f"need at least 2 runs, got {values.size}")
    return values


def aggregate(series):
    """Mean and sample standard deviation (n - 1 denominator)."""
    values = _values(series)
    return float(values.mean()), float(values.std(ddof=1))


def format_mean_std(mean, std, digits=2):
    """``77.9 (0.36)`` style cell."""
    return f"{round(mean, digits):g} ({round(std, digits):g})"


def t_cdf(t, df):
    """Student-t CDF via the regularized incomplete beta function.

    With ``x = df / (df + t^2)`` the upper tail beyond ``|t|`` is
    ``I_x(df/2, 1/2) / 2``.
    """
    if df <= 0:
        raise InputError("degrees of freedom must be positive")
    t = float(t)
    if t == 0.0:
        return 0.5
    tail = 0.5 * betainc(0.5 * df, 0.5, df / (df + t * t))
    return float(1.0 - tail if t > 0 else tail)


def two_tailed_p(t, df):
    """``P(|T| >= |t|)`` computed directly from the incomplete beta (no cancellation)."""
    if math.isinf(t):
        return 0.0
    return float(betainc(0.5 * df, 0.5, df / (df + t * t)))


def two_sample_t(a, b, equal_var=True):
    """Pooled-variance Student t test of ``mean(a) - mean(b)``.

    ``equal_var=False`` switches to Welch's test (non-integer df).
    """
    x, y = _values(a), _values(b)
    n1, n2 = x.size, y.size
    v1, v2 = x.var(ddof=1), y.var(ddof=1)
    diff = x.mean() - y.mean()
    if equal_var:
        df = n1 + n2 - 2
        pooled = ((n1 - 1) * v1 + (n2 - 1) * v2) / df
        se = math.sqrt(pooled * (1.0 / n1 + 1.0 / n2))
    else:
        q1, q2 = v1 / n1, v2 / n2
        se = math.sqrt(q1 + q2)
        df = (q1 + q2) ** 2 / (q1 ** 2 / (n1 - 1) + q2 ** 2 / (n2 - 1)) if se > 0 else n1 + n2 - 2
    if se == 0.0:
        if diff == 0.0:
            raise ZeroVariance("both samples are constant and equal; t is undefined")
        t = math.copysign(math.inf, diff)
    else:
        t = float(diff / se)
    p = two_tailed_p(t, df)
    return TTestResult(t, df, p, {level: p < level for level in LEVELS})


def comparison_rows(dataset_tag, baseline, challenger, equal_var=True):
    """Rows for the results table: one per model, the t-test on the challenger row.

    When both series are constant and equal the test is undefined; the
    challenger row then carries ``df`` but empty ``t``/``p`` and the returned
    result is None.
    """
    try:
        result = two_sample_t(challenger, baseline, equal_var)
    except ZeroVariance:
        result = None
    df = len(baseline) + len(challenger) - 2 if result is None else result.degrees_of_freedom
    rows = []
    for series, test in ((baseline, False), (challenger, True)):
        mean, std = aggregate(series)
        row = {"dataset": dataset_tag, "model": series.model_tag,
               "mean_cr": mean, "std_cr": std, "runs": len(series),
               "t": None, "df": df if test else None, "p": None}
        row.update({f"sig_{lvl:g}": None for lvl in LEVELS})
        if test and result is not None:
            row.update(t=result.t_statistic, p=result.p_value)
            row.update({f"sig_{lvl:g}": result.significant_at[lvl] for lvl in LEVELS})
        rows.append(row)
    return rows, result


ROW_FIELDS = ("dataset", "model", "runs", "mean_cr", "std_cr", "t", "df", "p",
              "sig_0.05", "sig_0.01")


def rows_to_csv(rows):
    out = io.StringIO()
    out.write(",".join(ROW_FIELDS) + "\n")
    for row in rows:
        cells = []
        for key in ROW_FIELDS:
            value = row[key]
            cells.append("" if value is None else
                         repr(float(value)) if isinstance(value, (float, np.floating)) else str(value))
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def rows_to_text(rows, baseline_tag="vae", challenger_tag="cvae"):
    """Human-readable tables: mean CR (std) per model, then the t-test line."""
    out = io.StringIO()
    out.write(f"{'Dataset':<20} {'Model':<8} Mean Classification Rate (Standard Deviation)\n")
    for row in rows:
        out.write(f"{row['dataset']:<20} {row['model']:<8} "
                  f"{format_mean_std(row['mean_cr'], row['std_cr'])}\n")
    out.write("\n")
    out.write(f"{'Dataset':<20} {'Model':<16} {'t-statistic':>12} {'df':>6} {'p-value':>12}  "
              "sig@5%  sig@1%\n")
    label = f"{baseline_tag.upper()} vs {challenger_tag.upper()}"
    for row in rows:
        if row["df"] is None:
            continue
        if row["t"] is None:
            out.write(f"{row['dataset']:<20} {label:<16} {'undefined':>12} {row['df']:>6g} "
                      f"{'undefined':>12}  (both series constant and equal)\n")
            continue
        out.write(f"{row['dataset']:<20} {label:<16} "
                  f"{row['t']:>12.4g} {row['df']:>6g} {row['p']:>12.3g}  "
                  f"{'yes' if row['sig_0.05'] else 'no':<6}  {'yes' if row['sig_0.01'] else 'no'}\n")
    return out.getvalue()
