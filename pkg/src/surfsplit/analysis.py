"""Decay-rate fits, the fitting ansatz and result files.

The ansatz, with r0 the smallest defect size:

    ln P_L(p, r0)  = 2 r0 ln p + x(p),          x(p) = x0 + x1 p + x2 p^2
    -alpha(p)      = c + 2 ln p + ln(1 + y(p)), y(p) = y1 p + y2 p^2 + y3 p^3
    ln P_L(p, r)   = ln P_L(p, r0) - alpha(p) (r - r0)

y(0) = 0 holds by construction because y has no constant term.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

PARAMS = ("x0", "x1", "x2", "c", "y1", "y2", "y3")
R0 = 2

RESULT_COLUMNS = ("method", "error_kind", "readout", "p", "r", "P_L", "sigma_rel", "seed",
                  "flips", "wall_time")


class FitError(ValueError):
    pass


# ---------------------------------------------------------------------------
# reference coefficients
# ---------------------------------------------------------------------------

def load_reference_coefficients() -> dict[tuple[str, str], dict[str, float]]:
    """Published fit coefficients keyed by (readout, error_kind)."""
    text = resources.files("surfsplit").joinpath("data/table1.csv").read_text()
    out = {}
    for row in csv.DictReader(line for line in text.splitlines() if not line.startswith("#")):
        key = (row["readout"], row["error_kind"])
        out[key] = {k: float(row[k]) for k in PARAMS}
    return out


# ---------------------------------------------------------------------------
# the ansatz
# ---------------------------------------------------------------------------

def _poly_x(p, x0, x1, x2):
    return x0 + x1 * p + x2 * p * p


def _poly_y(p, y1, y2, y3):
    return p * (y1 + p * (y2 + p * y3))


def ansatz_alpha(p, coeffs: dict[str, float]) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    y = _poly_y(p, coeffs["y1"], coeffs["y2"], coeffs["y3"])
    return -(coeffs["c"] + 2 * np.log(p) + np.log1p(y))


def ansatz_log_pl(p, r, coeffs: dict[str, float], r0: int = R0) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    base = 2 * r0 * np.log(p) + _poly_x(p, coeffs["x0"], coeffs["x1"], coeffs["x2"])
    return base - ansatz_alpha(p, coeffs) * (r - r0)


def ansatz_pl(p, r, coeffs: dict[str, float], r0: int = R0) -> np.ndarray:
    return np.exp(ansatz_log_pl(p, r, coeffs, r0))


# ---------------------------------------------------------------------------
# decay rate at fixed p
# ---------------------------------------------------------------------------

@dataclass
class AlphaFit:
    alpha: float
    sigma: float
    intercept: float
    n_points: int


def fit_alpha(points: Iterable[tuple[float, float, float]]) -> AlphaFit:
    """Weighted least squares of ln P_L = a - alpha * r.

    ``points`` are (r, P_L, sigma_rel) triples; sigma_rel is the relative
    error of P_L and hence the absolute error of ln P_L.  When every sigma
    is zero the fit is unweighted and the error comes from the residuals.
    """
    pts = [(float(r), float(P), float(s)) for r, P, s in points if P > 0]
    if len({r for r, _, _ in pts}) < 2:
        raise FitError("need positive P_L at two or more distinct r values")
    r = np.array([q[0] for q in pts])
    y = np.log([q[1] for q in pts])
    s = np.array([q[2] for q in pts])
    weighted = np.all(s > 0)
    w = 1.0 / s ** 2 if weighted else np.ones_like(r)
    A = np.column_stack([np.ones_like(r), -r])
    AtW = A.T * w
    cov = np.linalg.inv(AtW @ A)
    a, alpha = cov @ (AtW @ y)
    if not weighted:
        dof = len(r) - 2
        resid = y - A @ np.array([a, alpha])
        s2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = cov * s2
    return AlphaFit(float(alpha), float(math.sqrt(max(cov[1, 1], 0.0))), float(a), len(r))


# ---------------------------------------------------------------------------
# ansatz fit
# ---------------------------------------------------------------------------

@dataclass
class FitResult:
    coefficients: dict[str, float]
    residuals: np.ndarray  # (ln P_data - ln P_fit) / sigma
    rel_deviation: np.ndarray  # P_fit / P_data - 1
    covariance: np.ndarray | None
    condition: float
    pinned: dict[str, float] = field(default_factory=dict)
    success: bool = True

    def alpha(self, p) -> np.ndarray:
        return ansatz_alpha(p, self.coefficients)

    def log_pl(self, p, r) -> np.ndarray:
        return ansatz_log_pl(p, r, self.coefficients)


def _as_arrays(points):
    arr = np.array([(float(p), float(r), float(P), float(s)) for p, r, P, s in points])
    if arr.size == 0:
        raise FitError("no data points")
    if np.any(arr[:, 2] <= 0):
        raise FitError("P_L values must be positive")
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


def fit_ansatz(points: Iterable[tuple[float, float, float, float]], pin_c: float | None = None,
               r0: int = R0, y_degree: int = 3) -> FitResult:
    """Weighted nonlinear least squares for the ansatz coefficients.

    ``points`` are (p, r, P_L, sigma_rel).  Points without a positive sigma
    get unit weight.  ``pin_c`` fixes c (for example 4 ln 2); ``y_degree``
    below 3 pins the highest y coefficients to zero.
    """
    p, r, P, s = _as_arrays(points)
    if not np.any(r == r0):
        raise FitError(f"data must include r = {r0}")
    if len(np.unique(p)) < 4:
        raise FitError("need at least four distinct rates")
    w = np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), 1.0)
    target = np.log(P)
    scale = float(p.max())
    u = p / scale
    has_slope = np.any(r != r0)

    pinned: dict[str, float] = {}
    if pin_c is not None:
        pinned["c"] = float(pin_c)
    for k in range(y_degree + 1, 4):
        pinned[f"y{k}"] = 0.0
    if not has_slope:
        raise FitError("rank-deficient design: c and y need data at r != r0")
    free = [k for k in PARAMS if k not in pinned]

    # Scaled parameters: x_n and y_n multiply u^n instead of p^n.
    def unpack(theta):
        vals = dict(pinned)
        vals.update(zip(free, theta))
        return vals

    def model(theta):
        v = unpack(theta)
        x = _poly_x(u, v["x0"], v["x1"], v["x2"])
        y = _poly_y(u, v["y1"], v["y2"], v["y3"])
        arg = np.maximum(1.0 + y, 1e-300)
        neg_alpha = v["c"] + 2 * np.log(p) + np.log(arg)
        return 2 * r0 * np.log(p) + x + neg_alpha * (r - r0), y

    def resid(theta):
        m, y = model(theta)
        out = (target - m) * w
        bad = 1.0 + y <= 0
        if np.any(bad):
            out = out + np.where(bad, 1e6 * (1.0 - (1.0 + y)), 0.0)
        return out

    # initial guess: x from the r0 rows, c from the lowest-p slope, y = 0
    base = target - 2 * r0 * np.log(p)
    m0 = r == r0
    deg = min(2, int(m0.sum()) - 1)
    xc = np.polynomial.polynomial.polyfit(u[m0], base[m0], deg, w=w[m0])
    x_init = {f"x{k}": (xc[k] if k <= deg else 0.0) for k in range(3)}
    mr = ~m0
    lowest = u[mr] <= np.quantile(u[mr], 0.5)
    xr = _poly_x(u, x_init["x0"], x_init["x1"], x_init["x2"])
    slope = (target[mr] - 2 * r0 * np.log(p[mr]) - xr[mr]) / (r[mr] - r0) - 2 * np.log(p[mr])
    c_est = np.median(slope[lowest])
    init = dict(x_init, c=float(c_est), y1=0.0, y2=0.0, y3=0.0)
    theta0 = np.array([init[k] for k in free])
    sol = least_squares(resid, theta0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=20000)
    J = sol.jac
    sv = np.linalg.svd(J, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if not np.isfinite(cond) or cond > 1e13:
        raise FitError(f"rank-deficient design (condition number {cond:.3g}); "
                       "add rates or defect sizes")
    dof = max(len(p) - len(free), 1)
    try:
        cov_scaled = np.linalg.inv(J.T @ J)
        if not np.all(s > 0):
            cov_scaled *= float(sol.fun @ sol.fun) / dof
    except np.linalg.LinAlgError:
        cov_scaled = None
    vals = unpack(sol.x)
    # undo the u = p / scale substitution
    coeffs = {
        "x0": vals["x0"], "x1": vals["x1"] / scale, "x2": vals["x2"] / scale ** 2,
        "c": vals["c"],
        "y1": vals["y1"] / scale, "y2": vals["y2"] / scale ** 2, "y3": vals["y3"] / scale ** 3,
    }
    cov = None
    if cov_scaled is not None:
        factors = np.array([{"x0": 1, "x1": scale, "x2": scale ** 2, "c": 1, "y1": scale,
                             "y2": scale ** 2, "y3": scale ** 3}[k] for k in free], dtype=float)
        cov = cov_scaled / np.outer(factors, factors)
    fit_log = ansatz_log_pl(p, r, coeffs, r0)
    return FitResult(coeffs, (target - fit_log) * w, np.exp(fit_log - target) - 1.0, cov, cond,
                     pinned, bool(sol.success))


# ---------------------------------------------------------------------------
# result files
# ---------------------------------------------------------------------------

@dataclass
class ResultRecord:
    method: str
    error_kind: str
    readout: str
    p: float
    r: int
    P_L: float
    sigma_rel: float
    seed: int
    flips: int = 0
    wall_time: float = 0.0


def emit_results(records: Sequence[ResultRecord], path, curves_dir=None) -> None:
    """Write the CSV and, optionally, one two-column (p, P_L) file per curve."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(RESULT_COLUMNS)
        for rec in records:
            d = asdict(rec)
            wr.writerow([repr(d[k]) if isinstance(d[k], float) else d[k] for k in RESULT_COLUMNS])
    if curves_dir is not None:
        write_curves(records, curves_dir)


def read_results(path) -> list[ResultRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(ResultRecord(row["method"], row["error_kind"], row["readout"],
                                    float(row["p"]), int(row["r"]), float(row["P_L"]),
                                    float(row["sigma_rel"]), int(row["seed"]),
                                    int(row["flips"]), float(row["wall_time"])))
    return out


def curve_name(rec: ResultRecord) -> str:
    return f"{rec.readout}_{rec.error_kind}_{rec.method}_r{rec.r}.dat"


def write_curves(records: Sequence[ResultRecord], directory) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    groups: dict[str, list[ResultRecord]] = {}
    for rec in records:
        groups.setdefault(curve_name(rec), []).append(rec)
    written = []
    for name, recs in sorted(groups.items()):
        recs = sorted(recs, key=lambda q: q.p)
        fn = os.path.join(directory, name)
        with open(fn, "w") as fh:
            fh.write("# p P_L\n")
            for q in recs:
                fh.write(f"{q.p:.10g} {q.P_L:.10g}\n")
        written.append(fn)
    return written


def synthetic_points(coeffs: dict[str, float], rates: Sequence[float], sizes: Sequence[int],
                     sigma_rel: float = 0.0, rng: np.random.Generator | None = None
                     ) -> list[tuple[float, int, float, float]]:
    """(p, r, P_L, sigma_rel) generated from the ansatz, optionally with log-normal noise."""
    pts = []
    for r in sizes:
        for p in rates:
            val = float(ansatz_pl(p, r, coeffs))
            if sigma_rel > 0 and rng is not None:
                val *= math.exp(rng.normal(0.0, sigma_rel))
            pts.append((float(p), int(r), val, float(sigma_rel)))
    return pts
