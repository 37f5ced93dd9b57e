"""Ordinary least squares with standard errors, p-values, and R-squared.

Coefficients come from a column-pivoted QR factorization rather than normal
equations, both for stability and so rank deficiency can be detected (and the
offending columns named) from the R pivots. Two-sided p-values use an exact
small-sample Student t distribution evaluated through the regularized
incomplete beta function (continued fraction, Lentz's algorithm).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DomainError,
    InsufficientDataError,
    ParameterError,
    RankDeficiencyError,
    SchemaError,
    ValidationError,
)

# Relative pivot threshold below which a design column counts as dependent.
RANK_TOL = 1e-10

INTERCEPT_NAME = "intercept"


@dataclass
class RegressionFit:
    """Coefficient table plus fit summary for one OLS regression."""

    term_names: list[str]
    coefficients: np.ndarray
    std_errors: np.ndarray
    p_values: np.ndarray
    r_squared: float
    df_residual: int

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        self.std_errors = np.asarray(self.std_errors, dtype=float)
        self.p_values = np.asarray(self.p_values, dtype=float)
        q = len(self.term_names)
        for name, arr in (
            ("coefficients", self.coefficients),
            ("std_errors", self.std_errors),
            ("p_values", self.p_values),
        ):
            if arr.shape != (q,):
                raise ValidationError(f"{name} length does not match term_names")
        if self.df_residual <= 0:
            raise ValidationError("df_residual must be positive")
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValidationError("r_squared must lie in [0, 1]")

    @property
    def has_intercept(self) -> bool:
        return bool(self.term_names) and self.term_names[0] == INTERCEPT_NAME


def fit_ols(
    design: np.ndarray,
    outcome: Sequence[float],
    include_intercept: bool = True,
    term_names: Sequence[str] | None = None,
) -> RegressionFit:
    """Least-squares fit of ``outcome`` on the design columns.

    ``term_names`` labels the predictor columns (defaults x1..xq); the
    intercept term, when included, always comes first. A constant outcome
    yields R-squared 0 with a degenerate-outcome warning rather than an error.
    """
    X = np.asarray(design, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(outcome, dtype=float)
    n, q = X.shape
    if y.shape != (n,):
        raise SchemaError(f"outcome length {y.shape} does not match {n} rows")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValidationError("design and outcome must be finite")

    names = list(term_names) if term_names is not None else [f"x{j + 1}" for j in range(q)]
    if len(names) != q:
        raise ParameterError(f"expected {q} term names, got {len(names)}")
    if include_intercept:
        X = np.column_stack([np.ones(n), X])
        names = [INTERCEPT_NAME, *names]
    n_terms = X.shape[1]
    if n <= n_terms:
        raise InsufficientDataError(
            f"need more than {n_terms} observations for {n_terms} terms, got {n}"
        )

    Q, R, pivot = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    dependent = np.flatnonzero(diag < RANK_TOL * diag[0])
    if dependent.size:
        bad = sorted(names[pivot[j]] for j in dependent)
        raise RankDeficiencyError(f"design columns are linearly dependent: {bad}")

    beta_pivoted = scipy.linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty(n_terms)
    beta[pivot] = beta_pivoted

    residuals = y - X @ beta
    rss = float(residuals @ residuals)
    df = n - n_terms
    sigma2 = rss / df

    r_inv = scipy.linalg.solve_triangular(R, np.eye(n_terms))
    unscaled = r_inv @ r_inv.T  # (X'X)^-1 in pivoted order
    cov = np.empty((n_terms, n_terms))
    cov[np.ix_(pivot, pivot)] = unscaled
    std_errors = np.sqrt(np.maximum(sigma2 * np.diag(cov), 0.0))

    if include_intercept:
        centered = y - y.mean()
        tss = float(centered @ centered)
    else:
        tss = float(y @ y)
    if tss == 0.0:
        warnings.warn("degenerate outcome: zero total variation", stacklevel=2)
        r_squared = 0.0
    else:
        r_squared = min(max(1.0 - rss / tss, 0.0), 1.0)

    p_values = np.empty(n_terms)
    for j in range(n_terms):
        if std_errors[j] == 0.0:
            p_values[j] = 1.0 if beta[j] == 0.0 else 0.0
        else:
            p_values[j] = 2.0 * (1.0 - t_cdf(abs(beta[j]) / std_errors[j], df))

    return RegressionFit(
        term_names=names,
        coefficients=beta,
        std_errors=std_errors,
        p_values=p_values,
        r_squared=r_squared,
        df_residual=df,
    )


def predict(fit: RegressionFit, design: np.ndarray) -> np.ndarray:
    """Linear prediction for new rows (intercept column implied)."""
    X = np.asarray(design, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    expected = len(fit.term_names) - (1 if fit.has_intercept else 0)
    if X.shape[1] != expected:
        raise SchemaError(
            f"design has {X.shape[1]} columns, fit expects {expected} predictors"
        )
    if fit.has_intercept:
        return fit.coefficients[0] + X @ fit.coefficients[1:]
    return X @ fit.coefficients


def t_cdf(x: float, df: int) -> float:
    """Student t cumulative probability with ``df`` degrees of freedom.

    Evaluated through the regularized incomplete beta function; accurate to
    well under 1e-10 absolutely. ``x`` must be finite.
    """
    if df < 1:
        raise ParameterError(f"df must be >= 1, got {df}")
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"t_cdf requires finite x, got {x}")
    if x == 0.0:
        return 0.5
    x2 = x * x  # overflows to inf for huge x; z then underflows to 0
    z = df / (df + x2)
    tail = 0.5 * _reg_inc_beta(0.5 * df, 0.5, z)
    return 1.0 - tail if x > 0 else tail


def _reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) by continued fraction."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # Use the symmetry transform where the continued fraction converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cont_frac(a, b, x) / a
    return 1.0 - front * _beta_cont_frac(b, a, 1.0 - x) / b


def _beta_cont_frac(a: float, b: float, x: float, max_iter: int = 300) -> float:
    """Continued fraction for the incomplete beta (modified Lentz's method)."""
    tiny = 1e-300
    eps = 1e-16

    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise DomainError(
        f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})"
    )


def summary_text(fit: RegressionFit) -> str:
    """Fixed-column human-readable coefficient table (3-decimal display)."""
    width = max(len(name) for name in fit.term_names)
    width = max(width, len("Term"))
    lines = [
        f"{'Term':<{width}}  {'Coefficient':>11}  {'Std Error':>9}  {'p-value':>7}"
    ]
    for j, name in enumerate(fit.term_names):
        p = fit.p_values[j]
        p_text = "<0.001" if p < 0.001 else f"{p:.3f}"
        lines.append(
            f"{name:<{width}}  {fit.coefficients[j]:>11.3f}  "
            f"{fit.std_errors[j]:>9.3f}  {p_text:>7}"
        )
    lines.append("")
    lines.append(f"R-squared: {fit.r_squared:.3f}")
    lines.append(f"Residual degrees of freedom: {fit.df_residual}")
    return "\n".join(lines) + "\n"


def summary_json(fit: RegressionFit) -> str:
    doc = {
        "terms": [
            {
                "term": name,
                "coefficient": float(fit.coefficients[j]),
                "std_error": float(fit.std_errors[j]),
                "p_value": float(fit.p_values[j]),
            }
            for j, name in enumerate(fit.term_names)
        ],
        "r_squared": fit.r_squared,
        "df_residual": fit.df_residual,
    }
    return json.dumps(doc, indent=2) + "\n"


def summary_csv(fit: RegressionFit, destination: str | Path | IO[str]) -> None:
    """Coefficient table as CSV with full-precision values."""
    own = isinstance(destination, (str, Path))
    fh = open(destination, "w", encoding="utf-8", newline="") if own else destination
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["term", "coefficient", "std_error", "p_value"])
        for j, name in enumerate(fit.term_names):
            writer.writerow(
                [
                    name,
                    repr(float(fit.coefficients[j])),
                    repr(float(fit.std_errors[j])),
                    repr(float(fit.p_values[j])),
                ]
            )
    finally:
        if own:
            fh.close()
