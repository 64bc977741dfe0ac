"""Orbit probes, scaled approximation distances, and approximant sequences.

The probes are empirical counterparts of the transitivity notions: how
close does some scaled orbit point lambda * T^n f come to a target g?  The
approximants are the constructive sequences (v_k, lambda_k) whose
convergence the criteria guarantee; their contracts are checked
quantitatively by the callers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import DegenerateApproximantError, ZeroVectorError
from .funcspace import (
    GridFunction,
    L2,
    L2Norm,
    NormKind,
    PiecewiseMap,
    SUP,
    SegalNorm,
    linear_interpolate,
    norm,
    restrict,
)
from .operators import (
    CocycleSweep,
    CompositionOperator,
    apply_Sn,
    apply_Tn,
    scale_by_exp2,
    segal_compatible,
)

__all__ = [
    "projective_distance",
    "OrbitTrace",
    "orbit_trace",
    "operator_orbit",
    "Approximant",
    "supercyclic_approximant",
    "cesaro_approximant",
    "segal_approximant",
    "empirical_best",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(fn, a: float, b: float, tol: float = 1e-8):
    """Golden-section minimum of a unimodal function on [a, b]."""
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fn(x2)
    x = 0.5 * (a + b)
    return x, fn(x)


def projective_distance(f: GridFunction, g: GridFunction,
                        kind: NormKind = L2):
    """min over scalars lambda of ||lambda f - g|| and the minimizer.

    The L2 case is the closed least-squares form.  For the other norms a
    coarse grid of 64 phases is refined by golden-section searches on the
    modulus and then on the phase; any minimizer matching the brute-force
    grid oracle is acceptable.
    """
    if f.is_zero:
        raise ZeroVectorError("projective distance needs f != 0")
    if isinstance(kind, L2Norm):
        h = f.grid.step
        ip_fg = h * np.sum(f.values * np.conj(g.values))
        nf2 = h * np.sum(np.abs(f.values) ** 2)
        ng2 = h * np.sum(np.abs(g.values) ** 2)
        lam = np.conj(ip_fg) / nf2
        d2 = ng2 - abs(ip_fg) ** 2 / nf2
        return float(math.sqrt(max(d2, 0.0))), complex(lam)
    if g.is_zero:
        return 0.0, 0j
    rho_max = 2.0 * norm(g, kind) / norm(f, kind) * 1.05

    def dist(rho: float, theta: float) -> float:
        lam = rho * complex(math.cos(theta), math.sin(theta))
        return norm(lam * f - g, kind)

    best = (math.inf, 0.0, 0.0)
    thetas = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
    for theta in thetas:
        rho, d = _golden_min(lambda r: dist(r, theta), 0.0, rho_max)
        if d < best[0]:
            best = (d, rho, theta)
    # phase refinement around the best coarse angle; the tight tolerance
    # keeps the minimum scale-invariant to 1e-10 even at sup-norm kinks
    span = 2.0 * math.pi / 64

    def per_theta(theta: float) -> float:
        return _golden_min(lambda r: dist(r, theta), 0.0, rho_max,
                           tol=1e-12)[1]

    theta, _ = _golden_min(per_theta, best[2] - span, best[2] + span,
                           tol=1e-12)
    rho, d = _golden_min(lambda r: dist(r, theta), 0.0, rho_max, tol=1e-12)
    if d < best[0]:
        best = (d, rho, theta)
    d, rho, theta = best
    return float(d), rho * complex(math.cos(theta), math.sin(theta))


def operator_orbit(op: CompositionOperator, f: GridFunction, horizon: int,
                   side: str = "T") -> Iterator[tuple[int, GridFunction]]:
    """Yield (n, T^n f) (or S^n f) incrementally, one cocycle step per n."""
    if side not in ("T", "S"):
        raise ValueError("side must be 'T' or 'S'")
    sweep = CocycleSweep(op, f.grid.points)
    L = f.grid.half_width
    for n in range(1, horizon + 1):
        sweep.step()
        if side == "T":
            pos = sweep.forward_positions
            logs = sweep.log_forward
        else:
            pos = sweep.backward_positions
            logs = -sweep.log_backward
        vals = scale_by_exp2(logs, linear_interpolate(f, pos))
        out_of_grid = bool(np.any(np.abs(pos) > L))
        truncated = f.truncated or (
            out_of_grid and (f.values[0] != 0 or f.values[-1] != 0)
        )
        yield n, GridFunction(f.grid, vals, truncated)


@dataclass(frozen=True)
class OrbitTrace:
    """Per-n orbit norms, their Cesaro scalings, and optional scaled
    distances to a target."""

    norms: np.ndarray
    cesaro_norms: np.ndarray
    scaled_dists: Optional[np.ndarray]
    truncated: np.ndarray
    kind_label: str

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "norm", "cesaro_norm", "scaled_dist"])
            for i in range(len(self.norms)):
                d = "" if self.scaled_dists is None else repr(
                    float(self.scaled_dists[i]))
                writer.writerow([i + 1, repr(float(self.norms[i])),
                                 repr(float(self.cesaro_norms[i])), d])


def orbit_trace(op: CompositionOperator, f: GridFunction, horizon: int,
                kind: NormKind = SUP,
                target: GridFunction | None = None) -> OrbitTrace:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    norms = np.empty(horizon)
    cesaro = np.empty(horizon)
    dists = np.empty(horizon) if target is not None else None
    trunc = np.zeros(horizon, dtype=bool)
    for n, tf in operator_orbit(op, f, horizon):
        norms[n - 1] = norm(tf, kind)
        cesaro[n - 1] = norms[n - 1] / n
        trunc[n - 1] = tf.truncated
        if target is not None:
            if tf.is_zero:
                dists[n - 1] = norm(target, kind)
            else:
                dists[n - 1] = projective_distance(tf, target, kind)[0]
    label = type(kind).__name__
    return OrbitTrace(norms, cesaro, dists, trunc, label)


@dataclass(frozen=True)
class Approximant:
    v: GridFunction
    lam: float
    n: int


def _restricted(f: GridFunction, mask) -> GridFunction:
    if mask is None:
        return f
    return restrict(f, mask)


def supercyclic_approximant(op: CompositionOperator, f: GridFunction,
                            g: GridFunction, n: int, mask=None,
                            kind: NormKind = L2) -> Approximant:
    """v = f chi + (||T^n (f chi)|| / ||S^n (g chi)||)^(1/2) S^n (g chi),
    with the reciprocal square-root ratio as the scalar."""
    fr = _restricted(f, mask)
    gr = _restricted(g, mask)
    if fr.is_zero or gr.is_zero:
        raise DegenerateApproximantError("restricted f or g is zero")
    tf = apply_Tn(op, fr, n)
    sg = apply_Sn(op, gr, n)
    a = norm(tf, kind)
    b = norm(sg, kind)
    if a == 0 or b == 0:
        raise DegenerateApproximantError(
            "operator power lost all mass (grid truncation)"
        )
    v = fr + math.sqrt(a / b) * sg
    return Approximant(v, math.sqrt(b / a), n)


def cesaro_approximant(op: CompositionOperator, f: GridFunction,
                       g: GridFunction, n: int, mask=None,
                       kind: NormKind = L2) -> Approximant:
    """Cesaro variant: the scalar is pinned to 1/n, so the corrector enters
    with the compensating factor n and no norm ratio."""
    fr = _restricted(f, mask)
    gr = _restricted(g, mask)
    if fr.is_zero or gr.is_zero:
        raise DegenerateApproximantError("restricted f or g is zero")
    sg = apply_Sn(op, gr, n)
    v = fr + float(n) * sg
    return Approximant(v, 1.0 / n, n)


def segal_approximant(op: CompositionOperator, f: GridFunction,
                      g: GridFunction, n: int, tau: PiecewiseMap,
                      tail_tol: float = 1e-9,
                      tau_tol: float = 1e-9) -> Approximant:
    """Weighted-algebra variant: same ratio construction, norms taken in
    the tau-weighted series norm, no restriction step."""
    from .errors import SegalIncompatibleError

    if not segal_compatible(op, tau, f.grid, tau_tol):
        raise SegalIncompatibleError("tau is not alpha-invariant")
    if f.is_zero or g.is_zero:
        raise DegenerateApproximantError("f and g must be nonzero")
    kind = SegalNorm(tau, tail_tol)
    tf = apply_Tn(op, f, n)
    sg = apply_Sn(op, g, n)
    a = norm(tf, kind)
    b = norm(sg, kind)
    if a == 0 or b == 0:
        raise DegenerateApproximantError(
            "operator power lost all mass (grid truncation)"
        )
    v = f + math.sqrt(a / b) * sg
    return Approximant(v, math.sqrt(b / a), n)


@dataclass(frozen=True)
class BestApproach:
    target_index: int
    best_n: int
    best_distance: float


def empirical_best(op: CompositionOperator, f: GridFunction,
                   targets: Sequence[GridFunction], horizon: int,
                   kind: NormKind = L2,
                   mode: str = "plain") -> list[BestApproach]:
    """Closest orbit approach to each target under the chosen scaling.

    plain:  min_n ||T^n f - g||
    scaled: min_n projective_distance(T^n f, g)
    cesaro: min_n ||n^{-1} T^n f - g||
    """
    if mode not in ("plain", "scaled", "cesaro"):
        raise ValueError("mode must be plain, scaled, or cesaro")
    best = [(math.inf, 0)] * len(targets)
    for n, tf in operator_orbit(op, f, horizon):
        for i, g in enumerate(targets):
            if mode == "plain":
                d = norm(tf - g, kind)
            elif mode == "cesaro":
                d = norm((1.0 / n) * tf - g, kind)
            else:
                if tf.is_zero:
                    d = norm(g, kind)
                else:
                    d = projective_distance(tf, g, kind)[0]
            if d < best[i][0]:
                best[i] = (d, n)
    return [BestApproach(i, n, d) for i, (d, n) in enumerate(best)]


def best_table_csv(rows: Sequence[BestApproach], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target", "best_n", "best_distance"])
        for r in rows:
            writer.writerow([r.target_index, r.best_n,
                             repr(float(r.best_distance))])
