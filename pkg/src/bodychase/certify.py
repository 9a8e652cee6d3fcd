"""Dual certificates for chase trajectories.

Each projection contributes a Lagrange multiplier. Scaled copies of
those multipliers form feasible solutions of the dual of the offline
minimum-upward-recourse LP, so their objective is a certified lower
bound on what any offline trajectory must pay. Two constructions are
provided: a warmup certificate whose scaling constant involves the
coefficient aspect ratio, and a refined certificate that first damps
the covering multipliers (ytilde) so the scaling depends only on the
sparsity.

The dual has one row per coordinate and time,

    covering t:  c_i^t ybar^t - rbar_i^t + rbar_i^{t+1} <= 0
    packing  t: -p_i^t zbar^t - rbar_i^t + rbar_i^{t+1} <= 0
    0 <= rbar_i^t <= w_i,   rbar_i^{T+1} = 0,

with objective sum ybar - sum zbar. Coordinate clamps (freezes) add
an absorbing multiplier on their own (i, t) row, so the checker skips
exactly those rows; the refined construction is only sound for
clamp-free logs and refuses others.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import ChaseError, HalfspaceConstraint, Kind, RecourseLedger

__all__ = [
    "CertificateError",
    "StepKind",
    "LogStep",
    "MultiplierLog",
    "DualCertificate",
    "append_multiplier",
    "append_freeze",
    "build_warmup_dual",
    "refine_ytilde",
    "build_refined_dual",
    "certified_report",
    "certify_run",
    "check_dual_feasibility",
    "max_window_sums",
    "check_ineq1",
    "check_ineq2",
    "check_movement_bound",
    "check_z_bound",
    "check_subset_lemma",
    "FEASIBILITY_TOL",
]

FEASIBILITY_TOL = 1e-8


class CertificateError(ChaseError):
    """A certificate internal check failed; the log cannot be certified."""


class StepKind(enum.Enum):
    COVERING = "C"
    PACKING = "P"
    FREEZE = "F"


@dataclass
class LogStep:
    kind: StepKind
    indices: np.ndarray
    coeffs: np.ndarray
    multiplier: float
    x_before: np.ndarray
    x_after: np.ndarray
    sparsity: int


class MultiplierLog:
    """Ordered record of projections and clamps along one run.

    Tracks per-coordinate extreme covering coefficients, the largest
    covering support size, and full before/after snapshots (needed by
    the warmup certificate and the lemma checks). The coordinate space
    may grow during a run; snapshots are padded with zeros on demand,
    which is exact because coordinates are zero before they first appear.
    """

    def __init__(self, weights):
        self.weights = np.asarray(weights, dtype=float)
        self.steps: list[LogStep] = []
        self._cmax: dict[int, float] = {}
        self._cmin: dict[int, float] = {}
        self.max_sparsity = 0
        self.freeze_count = 0

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def horizon(self) -> int:
        return len(self.steps)

    @property
    def has_freeze(self) -> bool:
        return self.freeze_count > 0

    @property
    def sparsity(self) -> int:
        return self.max_sparsity

    @property
    def aspect_ratio(self) -> float:
        if not self._cmax:
            return 0.0
        return max(self._cmax[i] / self._cmin[i] for i in self._cmax)

    def coeff_max(self) -> np.ndarray:
        out = np.zeros(self.n)
        for i, v in self._cmax.items():
            out[i] = v
        return out

    def extend_weights(self, weights) -> None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape[0] < self.n or not np.array_equal(weights[: self.n], self.weights):
            raise ValueError("weights may only grow, never change")
        self.weights = weights

    def append_projection(self, row: HalfspaceConstraint, multiplier, x_before, x_after) -> "MultiplierLog":
        if multiplier < 0.0:
            raise ValueError("multiplier must be nonnegative, got %r" % multiplier)
        kind = StepKind.COVERING if row.kind is Kind.COVERING else StepKind.PACKING
        if kind is StepKind.COVERING:
            self.max_sparsity = max(self.max_sparsity, row.sparsity)
            for i, v in zip(row.indices.tolist(), row.coeffs.tolist()):
                self._cmax[i] = max(self._cmax.get(i, v), v)
                self._cmin[i] = min(self._cmin.get(i, v), v)
        self.steps.append(
            LogStep(
                kind,
                row.indices.copy(),
                row.coeffs.copy(),
                float(multiplier),
                np.array(x_before, dtype=float),
                np.array(x_after, dtype=float),
                row.sparsity,
            )
        )
        return self

    def append_freeze(self, indices, x_before, x_after) -> "MultiplierLog":
        idx = np.array(sorted(int(i) for i in indices), dtype=np.int64)
        self.steps.append(
            LogStep(
                StepKind.FREEZE,
                idx,
                np.zeros(idx.shape[0]),
                0.0,
                np.array(x_before, dtype=float),
                np.array(x_after, dtype=float),
                0,
            )
        )
        self.freeze_count += 1
        return self


def append_multiplier(log: MultiplierLog, row, multiplier, x_before, x_after) -> MultiplierLog:
    return log.append_projection(row, multiplier, x_before, x_after)


def append_freeze(log: MultiplierLog, indices, x_before, x_after) -> MultiplierLog:
    return log.append_freeze(indices, x_before, x_after)


@dataclass
class DualCertificate:
    scheme: str
    scaling: float
    y_bar: np.ndarray
    z_bar: np.ndarray
    r_bar: np.ndarray
    ytilde: np.ndarray | None
    objective: float
    max_violation: float

    @property
    def certified_bound(self) -> float:
        # the all-zero dual is always feasible, so the bound never dips below 0
        return max(0.0, self.objective)


def _padded(vec: np.ndarray, n: int) -> np.ndarray:
    if vec.shape[0] == n:
        return vec
    out = np.zeros(n)
    out[: vec.shape[0]] = vec
    return out


def _coeff_matrices(log: MultiplierLog):
    """Dense (n, T) covering/packing coefficient matrices plus y, z vectors."""
    n, T = log.n, log.horizon
    C = np.zeros((n, T))
    P = np.zeros((n, T))
    y = np.zeros(T)
    z = np.zeros(T)
    for t, step in enumerate(log.steps):
        if step.kind is StepKind.COVERING:
            C[step.indices, t] = step.coeffs
            y[t] = step.multiplier
        elif step.kind is StepKind.PACKING:
            P[step.indices, t] = step.coeffs
            z[t] = step.multiplier
    return C, P, y, z


def _effective_scale_inputs(log: MultiplierLog):
    d = max(1, log.sparsity)
    delta = max(1.0, log.aspect_ratio)
    return d, delta


def check_dual_feasibility(log: MultiplierLog, y_bar, z_bar, r_bar) -> float:
    """Largest violation of any dual row by (y_bar, z_bar, r_bar).

    Rows of frozen coordinates at their freeze times are exempt: those
    primal columns carry a clamp constraint whose multiplier can absorb
    any excess.
    """
    n, T = log.n, log.horizon
    C, P, _, _ = _coeff_matrices(log)
    r_next = np.zeros((n, T))
    if T > 1:
        r_next[:, :-1] = r_bar[:, 1:]
    rows = C * y_bar - P * z_bar - r_bar + r_next
    for t, step in enumerate(log.steps):
        if step.kind is StepKind.FREEZE:
            rows[step.indices, t] = -np.inf
    worst = float(np.max(rows)) if rows.size else 0.0
    worst = max(worst, float(np.max(-r_bar)) if r_bar.size else 0.0)
    w_col = log.weights[:, None]
    worst = max(worst, float(np.max(r_bar - w_col)) if r_bar.size else 0.0)
    if y_bar.size:
        worst = max(worst, float(np.max(-y_bar)), float(np.max(-z_bar)))
    return worst


def build_warmup_dual(log: MultiplierLog, eps: float) -> DualCertificate:
    """Certificate with scaling A = log(1 + 4 d Delta / eps).

    Multipliers are divided by A; the movement rows get
    r_i^t = w_i (1 - log(1 + 4 d c_i^max x_i^{t-1} / eps) / A), evaluated
    on the recorded trajectory. Coordinates that never appear in a
    covering row have c_i^max = 0 and hence r_i^t = w_i. Sound in the
    presence of freezes (their rows are exempt, see the checker).
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    n, T = log.n, log.horizon
    d, delta = _effective_scale_inputs(log)
    A = math.log1p(4.0 * d * delta / eps)
    _, _, y, z = _coeff_matrices(log)
    y_bar = y / A
    z_bar = z / A
    cmax = log.coeff_max()
    xb = np.zeros((n, T))
    for t, step in enumerate(log.steps):
        xb[:, t] = _padded(step.x_before, n)
    w_col = log.weights[:, None]
    r_bar = w_col * (1.0 - np.log1p(4.0 * d * cmax[:, None] * xb / eps) / A)
    objective = float(y_bar.sum() - z_bar.sum())
    violation = check_dual_feasibility(log, y_bar, z_bar, r_bar)
    return DualCertificate("warmup", A, y_bar, z_bar, r_bar, None, objective, violation)


def refine_ytilde(log: MultiplierLog, eps: float) -> np.ndarray:
    """Damped covering multipliers per the budgeted back-scan.

    Processing covering times in order, each support coordinate spends a
    budget c_i^l * y^l on earlier covering times whose coefficient on i
    is at least 10 d^l c_i^l / eps, always consuming the latest candidate
    first; each earlier time is then lowered by the largest consumption
    any coordinate charged to it. The result keeps at least a
    (1 - eps/10) fraction of the multiplier mass while every window sum
    of c_i ytilde - p_i z stays below w_i log(1 + 40 d^2/eps^2). Both
    facts are verified before returning.

    Only valid for clamp-free logs: a freeze resets a coordinate without
    a packing payment, which breaks the window bound.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if log.has_freeze:
        raise CertificateError(
            "refined certificate requires a clamp-free log (%d freezes present)"
            % log.freeze_count
        )
    T = log.horizon
    ytilde = np.zeros(T)
    appearances: dict[int, list[tuple[int, float]]] = {}
    for ell, step in enumerate(log.steps):
        if step.kind is not StepKind.COVERING:
            continue
        y_ell = step.multiplier
        drops: dict[int, float] = {}
        for pos in range(step.indices.shape[0]):
            i = int(step.indices[pos])
            c_il = float(step.coeffs[pos])
            budget = c_il * y_ell
            if budget <= 0.0:
                continue
            threshold = 10.0 * step.sparsity * c_il / eps
            seen = appearances.get(i, ())
            candidates = [(tau, c) for tau, c in seen if c >= threshold and ytilde[tau] > 0.0]
            k = len(candidates) - 1
            while budget > 0.0 and k >= 0:
                tau, c_tau = candidates[k]
                take = min(ytilde[tau], budget / c_tau)
                budget -= c_tau * take
                if take > drops.get(tau, 0.0):
                    drops[tau] = take
                if take >= ytilde[tau]:
                    k -= 1
                else:
                    break
        ytilde[ell] = y_ell
        for tau, amount in drops.items():
            ytilde[tau] = max(0.0, ytilde[tau] - amount)
        for pos in range(step.indices.shape[0]):
            appearances.setdefault(int(step.indices[pos]), []).append(
                (ell, float(step.coeffs[pos]))
            )

    excess1, where1 = check_ineq1(log, ytilde, eps)
    if excess1 > FEASIBILITY_TOL:
        raise CertificateError(
            "window sum bound violated by %.3e at coordinate %d" % (excess1, where1)
        )
    deficit = check_ineq2(log, ytilde, eps)
    if deficit > FEASIBILITY_TOL:
        raise CertificateError("ytilde mass dropped below (1 - eps/10) by %.3e" % deficit)
    return ytilde


def max_window_sums(log: MultiplierLog, ytilde: np.ndarray) -> np.ndarray:
    """Per coordinate, the maximum over nonempty time windows [s, t] of
    sum of c_i^tau ytilde^tau minus p_i^tau z^tau."""
    C, P, _, z = _coeff_matrices(log)
    a = C * ytilde - P * z
    n, T = a.shape
    best = np.full(n, -np.inf)
    cur = np.full(n, -np.inf)
    for t in range(T):
        cur = np.where(cur > 0.0, cur + a[:, t], a[:, t])
        best = np.maximum(best, cur)
    return best


def check_ineq1(log: MultiplierLog, ytilde: np.ndarray, eps: float):
    """(worst excess over the window bound, offending coordinate)."""
    d = max(1, log.sparsity)
    bound = log.weights * math.log1p(40.0 * d * d / (eps * eps))
    if log.horizon == 0:
        return 0.0, -1
    gaps = max_window_sums(log, ytilde) - bound
    i = int(np.argmax(gaps))
    return float(gaps[i]), i


def check_ineq2(log: MultiplierLog, ytilde: np.ndarray, eps: float) -> float:
    """How far sum(ytilde) falls below (1 - eps/10) sum(y); <= 0 is good."""
    _, _, y, _ = _coeff_matrices(log)
    return float((1.0 - eps / 10.0) * y.sum() - ytilde.sum())


def build_refined_dual(log: MultiplierLog, ytilde: np.ndarray, eps: float) -> DualCertificate:
    """Certificate with scaling A = log(1 + 40 d^2 / eps^2).

    The movement duals come from the backward suffix-maximum recurrence
    M_i^t = max(0, a_t + M_i^{t+1}) with a_t = c_i^t ytilde^t on covering
    steps and -p_i^t z^t on packing steps; r_bar = M / A. Row feasibility
    then holds by construction and r_bar <= w_i by the window bound;
    both are still verified and violations abort.
    """
    if log.has_freeze:
        raise CertificateError("refined certificate requires a clamp-free log")
    n, T = log.n, log.horizon
    d, _ = _effective_scale_inputs(log)
    A = math.log1p(40.0 * d * d / (eps * eps))
    C, P, _, z = _coeff_matrices(log)
    y_bar = np.asarray(ytilde, dtype=float) / A
    z_bar = z / A
    a = C * ytilde - P * z
    M = np.zeros((n, T))
    carry = np.zeros(n)
    for t in range(T - 1, -1, -1):
        carry = np.maximum(0.0, a[:, t] + carry)
        M[:, t] = carry
    r_bar = M / A
    objective = float(y_bar.sum() - z_bar.sum())
    violation = check_dual_feasibility(log, y_bar, z_bar, r_bar)
    if violation > FEASIBILITY_TOL:
        raise CertificateError("refined dual infeasible by %.3e" % violation)
    return DualCertificate("refined", A, y_bar, z_bar, r_bar, np.asarray(ytilde, float), objective, violation)


def check_movement_bound(log: MultiplierLog, eps: float) -> float:
    """Worst excess of per-covering-step upward movement over (1 + eps/4) y."""
    worst = -np.inf
    n = log.n
    for step in log.steps:
        if step.kind is not StepKind.COVERING:
            continue
        diff = _padded(step.x_after, n) - _padded(step.x_before, n)
        up = float(log.weights @ np.clip(diff, 0.0, None))
        worst = max(worst, up - (1.0 + eps / 4.0) * step.multiplier)
    return worst if worst > -np.inf else 0.0


def check_z_bound(log: MultiplierLog, eps: float) -> float:
    """(1 + eps/4) sum(y) - (1 + eps) sum(z); >= 0 up to tol on real runs."""
    _, _, y, z = _coeff_matrices(log)
    return float((1.0 + eps / 4.0) * y.sum() - (1.0 + eps) * z.sum())


def check_subset_lemma(log: MultiplierLog, eps: float, i: int, s: int, t: int, subset) -> float:
    """lhs - rhs of the subset bound; <= tol expected.

    subset must be covering times within [s, t] (0-based, inclusive).
    """
    subset = sorted(int(tau) for tau in subset)
    if any(tau < s or tau > t for tau in subset):
        raise ValueError("subset must lie inside [s, t]")
    C, P, y, z = _coeff_matrices(log)
    for tau in subset:
        if log.steps[tau].kind is not StepKind.COVERING:
            raise ValueError("subset may only contain covering times")
    lhs = sum(C[i, tau] * y[tau] for tau in subset)
    lhs -= sum(
        P[i, tau] * z[tau]
        for tau in range(s, t + 1)
        if log.steps[tau].kind is StepKind.PACKING
    )
    cmax_s = max((C[i, tau] for tau in subset), default=0.0)
    d = max(1, log.sparsity)
    x_it = float(_padded(log.steps[t].x_after, log.n)[i])
    w_i = float(log.weights[i])
    rhs = w_i * math.log1p(4.0 * d * cmax_s * x_it / eps)
    return float(lhs - rhs)


def _ratio(upward: float, bound: float):
    if bound > 0.0:
        return upward / bound
    if upward > 0.0:
        return float("inf")
    return None


def certified_report(cert: DualCertificate, ledger: RecourseLedger, eps: float) -> dict:
    """Lower bound, realized recourse, their ratio, and the ratio cap."""
    bound = cert.certified_bound
    upward = ledger.upward_total
    cap = (2.0 + eps) * (1.0 + eps) / eps * cert.scaling
    return {
        "scheme": cert.scheme,
        "lower_bound": bound,
        "upward_recourse": upward,
        "ratio": _ratio(upward, bound),
        "theoretical_cap": cap,
        "A": cert.scaling,
    }


def certify_run(log: MultiplierLog, ledger: RecourseLedger, eps: float) -> dict:
    """Summary record combining both certificates.

    The refined fields are null when the log contains freezes (the
    refined construction is unsound there); the theoretical cap then
    falls back to the warmup constant.
    """
    out = {
        "upward_recourse": ledger.upward_total,
        "l1_recourse": ledger.l1_total,
        "warmup_bound": 0.0,
        "refined_bound": None,
        "ratio_warmup": None,
        "ratio_refined": None,
        "theoretical_cap": None,
        "A_warmup": None,
        "A_refined": None,
        "d": log.sparsity,
        "Delta": log.aspect_ratio,
    }
    if log.horizon == 0:
        return out
    warm = build_warmup_dual(log, eps)
    out["warmup_bound"] = warm.certified_bound
    out["ratio_warmup"] = _ratio(ledger.upward_total, warm.certified_bound)
    out["A_warmup"] = warm.scaling
    out["theoretical_cap"] = (2.0 + eps) * (1.0 + eps) / eps * warm.scaling
    if not log.has_freeze:
        ytilde = refine_ytilde(log, eps)
        refined = build_refined_dual(log, ytilde, eps)
        out["refined_bound"] = refined.certified_bound
        out["ratio_refined"] = _ratio(ledger.upward_total, refined.certified_bound)
        out["A_refined"] = refined.scaling
        out["theoretical_cap"] = (2.0 + eps) * (1.0 + eps) / eps * refined.scaling
    return out
