"""Sliced filling volumes, witness search, and the tetrahedral property.

The sliced filling of a ball integrates, over a box of level tuples, the
minimal filling mass of the boundary of each iterated slice; 0-dimensional
fillings are solved by exact transport and the product over the slicing
functions' Lipschitz constants turns the integral into a lower bound for
the ball's mass.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .complexes import GeometricComplex, PLFunction, distance_function
from .currents import SimplicialCurrent, boundary, mass
from .fillvol import filling_volume, filling_volume_0d
from .metricspace import ArgumentError
from .slicing import (
    Refinement,
    slice_current,
    subdivide_at_level,
    support_closure,
    _sublevel_indicator,
)

# Euclidean 3-space constants for the band [(1-beta) r, (1+beta) r]^2 at
# beta = 1/2, witnesses at mutual distance r on the sphere of radius r.
# Derived by scripts/derive_c_e3.py (closed-form three-sphere intersection,
# brute-force scan of the band at r = 1):
#   - the pointwise minimum over the closed band is 0: near the band corners
#     (1/2, 1/2), (1/2, 3/2) and (3/2, 1/2) the intersection set is empty,
#     for every witness configuration, so no positive pointwise constant
#     exists at beta = 1/2;
#   - the band integral of h is positive and equals the integral tetra
#     constant, since (2 * beta)^(m-1) = 1 at beta = 1/2.
C_E3_BAND_INTEGRAL = 1.3410254
C_E3_POINTWISE_MIN = 0.0
# Pointwise constant for the narrower band at beta = 0.3 (same script).
C_E3_POINTWISE_BETA03 = 0.9797279
POINT_MERGE_REL = 1e-9


@dataclass
class BallContext:
    """A ball current with its refinement and discrete bounding sphere."""

    current: SimplicialCurrent
    refinement: Refinement
    center: int
    radius: float
    rho: PLFunction

    @property
    def complex(self) -> GeometricComplex:
        return self.current.complex

    def sphere_vertices(self) -> list[int]:
        """Vertices of the discrete bounding sphere: the cut vertices created
        at the ball level (the current's own boundary is excluded)."""
        if self.current.dim < 1:
            return []
        cut_start = self.refinement.n_old_vertices
        return [v for v in boundary(self.current).support_vertices() if v >= cut_start]

    def support_range(self, f: PLFunction):
        verts = self.current.support_vertices()
        if not verts:
            return 0.0, 0.0
        vals = f.values[verts]
        return float(vals.min()), float(vals.max())


def ball_context(T: SimplicialCurrent, p: int, r: float, mode="auto") -> BallContext:
    if r <= 0:
        raise ArgumentError("ball radius must be positive")
    rho = distance_function(T.complex, p, mode=mode)
    ref = subdivide_at_level(T.complex, rho.values, r)
    T2 = ref.transfer_current(T)
    rho2 = ref.transfer_function(rho, own_level=True)
    keep = _sublevel_indicator(ref.complex, T.dim, rho2.values, ref.level)
    current = SimplicialCurrent(
        ref.complex, T.dim, {i: c for i, c in T2.coeffs.items() if keep[i]}
    )
    # vertex ids and the metric survive re-rooting, so the distance values
    # and any externally supplied witness ids stay valid
    current = support_closure(current)
    rho2 = PLFunction(current.complex, rho2.values, source=rho2.source)
    return BallContext(current=current, refinement=ref, center=p, radius=r, rho=rho2)


@dataclass
class SlicedFillReport:
    center: int
    radius: float
    grid_axes: list
    values: np.ndarray
    integral: float
    lipschitz: list
    mass_lower_bound: float
    ball_mass: float
    error_estimate: float | None = None
    skipped: int = 0
    witnesses: tuple = ()
    warnings: list = field(default_factory=list)

    def to_json(self):
        return {
            "center": self.center,
            "radius": self.radius,
            "grid_axes": [list(map(float, g)) for g in self.grid_axes],
            "values": self.values.tolist(),
            "integral": self.integral,
            "lipschitz": list(map(float, self.lipschitz)),
            "mass_lower_bound": self.mass_lower_bound,
            "ball_mass": self.ball_mass,
            "error_estimate": self.error_estimate,
            "skipped": self.skipped,
            "witnesses": list(self.witnesses),
            "warnings": list(self.warnings),
        }


@dataclass
class TetraReport:
    center: int
    radius: float
    witnesses: tuple
    C: float
    beta: float
    grid_axes: list
    h_values: np.ndarray
    passed: bool
    integral_passed: bool
    integral: float
    required_integral: float
    ball_mass: float
    warnings: list = field(default_factory=list)

    def to_json(self):
        return {
            "center": self.center,
            "radius": self.radius,
            "witnesses": list(self.witnesses),
            "C": self.C,
            "beta": self.beta,
            "grid_axes": [list(map(float, g)) for g in self.grid_axes],
            "h_values": self.h_values.tolist(),
            "passed": self.passed,
            "integral_passed": self.integral_passed,
            "integral": self.integral,
            "required_integral": self.required_integral,
            "ball_mass": self.ball_mass,
            "warnings": list(self.warnings),
        }


def _tensor_eval(start: SimplicialCurrent, functions, grids, leaf):
    """Evaluate leaf(current) over a tensor grid of iterated slice levels.

    Slices share prefixes: the level grid of axis j is sliced once per
    prefix, so axis-0 slices are computed len(grids[0]) times in total.
    """
    shape = tuple(len(g) for g in grids)
    out = np.zeros(shape if shape else (1,))
    skipped = [0]

    def rec(current, fns, depth, prefix):
        if depth == len(grids):
            out[prefix if prefix else 0] = leaf(current)
            return
        for i, t in enumerate(grids[depth]):
            try:
                sl = slice_current(current, fns[0], float(t))
            except ArgumentError:
                skipped[0] += 1
                continue
            rest = [sl.refinement.transfer_function(g) for g in fns[1:]]
            nested = support_closure(sl.current) if rest else sl.current
            rec(nested, rest, depth + 1, prefix + (i,))

    rec(start, list(functions), 0, ())
    return out, skipped[0]


def _support_atoms(Z: SimplicialCurrent):
    ids, theta, sigma = [], [], []
    for i, c in Z.coeffs.items():
        (v,) = Z.simplex(i)
        ids.append(v)
        theta.append(abs(c))
        sigma.append(1 if c > 0 else -1)
    return ids, theta, sigma


def _merged_support_points(Z: SimplicialCurrent, merge_tol: float):
    """Distinct support points after merging near-duplicates."""
    ids = Z.support_vertices()
    metric = Z.complex.metric
    reps: list[int] = []
    for v in ids:
        if all(metric.dist(v, w) > merge_tol for w in reps):
            reps.append(v)
    return reps


def fill_value_of_boundary(current: SimplicialCurrent) -> float:
    """FillVol of the boundary of a slice, routed by dimension."""
    B = boundary(current)
    if B.is_zero():
        return 0.0
    if B.dim == 0:
        ids, theta, sigma = _support_atoms(B)
        return filling_volume_0d(B.complex.metric, theta, sigma, point_ids=ids).value
    return filling_volume(B, B.complex).value


def h_min_distance(current: SimplicialCurrent, merge_tol: float) -> float:
    """Min pairwise distance between distinct boundary points; 0 if fewer
    than two distinct points remain."""
    B = boundary(current)
    if B.is_zero():
        return 0.0
    reps = _merged_support_points(B, merge_tol)
    if len(reps) < 2:
        return 0.0
    metric = current.complex.metric
    return min(metric.dist(a, b) for a, b in itertools.combinations(reps, 2))


def h_function(T, p, r, levels, witnesses, context: BallContext | None = None) -> float:
    """Min pairwise distance within the intersection of the sphere about p
    with the witness-distance level sets, extracted from iterated slicing."""
    ctx = context or ball_context(T, p, r)
    levels = list(levels)
    if len(levels) != len(witnesses):
        raise ArgumentError("need one level per witness")
    fns = [distance_function(ctx.complex, w) for w in witnesses]
    grids = [np.array([t]) for t in levels]
    vals, _ = _tensor_eval(
        ctx.current, fns, grids, lambda cur: h_min_distance(cur, POINT_MERGE_REL * ctx.radius)
    )
    return float(vals.reshape(-1)[0])


def sliced_fill(
    T: SimplicialCurrent,
    p: int,
    r: float,
    functions=None,
    witnesses=None,
    grid: int = 32,
    context: BallContext | None = None,
) -> SlicedFillReport:
    """Quadrature of level -> FillVol(boundary of slice) over the level box.

    `functions` are PL functions on T's complex, or `witnesses` are vertex
    ids whose distance functions are used.  The level box spans the range of
    each function over the closed ball.  The integral divided by the product
    of Lipschitz constants is a lower bound for the ball's mass.
    """
    if grid < 2:
        raise ArgumentError("grid must have at least 2 nodes per axis")
    ctx = context or ball_context(T, p, r)
    if witnesses is not None and functions is not None:
        raise ArgumentError("pass either functions or witnesses, not both")
    wit = tuple(witnesses) if witnesses is not None else ()
    if witnesses is not None:
        fns = [distance_function(ctx.complex, w) for w in wit]
    else:
        fns = [ctx.refinement.transfer_function(f) for f in (functions or [])]
    k = len(fns)
    m = T.dim
    if k > m - 1:
        raise ArgumentError("sliced filling needs at most dim - 1 slicing functions")
    ball_m = mass(ctx.current)
    if k == 0:
        value = fill_value_of_boundary(ctx.current)
        return SlicedFillReport(
            center=p,
            radius=r,
            grid_axes=[],
            values=np.array([value]),
            integral=value,
            lipschitz=[],
            mass_lower_bound=value,
            ball_mass=ball_m,
            witnesses=wit,
        )
    grids = []
    for f in fns:
        lo, hi = ctx.support_range(f)
        grids.append(np.linspace(lo, hi, grid))
    values, skipped = _tensor_eval(ctx.current, fns, grids, fill_value_of_boundary)
    integral = _tensor_trapezoid(values, grids)
    estimate = _richardson_estimate(values, grids)
    lips = [f.lip for f in fns]
    lam = 1.0
    for L in lips:
        lam *= 1.0 / L if L > 0 else 0.0
    report = SlicedFillReport(
        center=p,
        radius=r,
        grid_axes=grids,
        values=values,
        integral=integral,
        lipschitz=lips,
        mass_lower_bound=lam * integral,
        ball_mass=ball_m,
        error_estimate=estimate,
        skipped=skipped,
        witnesses=wit,
    )
    if report.mass_lower_bound > ball_m + 2 * (estimate or 0.0) + 1e-6:
        report.warnings.append(
            f"mass lower bound {report.mass_lower_bound} exceeds ball mass {ball_m}"
        )
    return report


def _tensor_trapezoid(values, grids):
    acc = values
    for axis in range(len(grids) - 1, -1, -1):
        acc = np.trapezoid(acc, grids[axis], axis=axis)
    return float(acc)


def _richardson_estimate(values, grids):
    if any((len(g) - 1) % 2 or len(g) < 3 for g in grids):
        return None
    sub_vals = values[tuple(slice(None, None, 2) for _ in grids)]
    sub_grids = [g[::2] for g in grids]
    coarse = _tensor_trapezoid(sub_vals, sub_grids)
    fine = _tensor_trapezoid(values, grids)
    return abs(fine - coarse)


def _witness_tuples(sphere, k, budget):
    """Deterministic candidate witness tuples from the discrete sphere."""
    n = len(sphere)
    if n == 0 or k == 0:
        return [()]
    tuples = []
    if k == 1:
        step = max(1, n // max(budget, 1))
        tuples = [(sphere[i],) for i in range(0, n, step)][:budget]
    else:
        # spread tuples at several angular offsets
        for start in range(min(4, n)):
            for frac in (3, 4, 6):
                idx = [(start + j * n // frac) % n for j in range(k)]
                if len(set(idx)) == k:
                    tuples.append(tuple(sphere[i] for i in idx))
        seen = set()
        uniq = []
        for t in tuples:
            if t not in seen:
                seen.add(t)
                uniq.append(t)
        tuples = uniq[: max(budget, 1)]
    return tuples or [tuple(sphere[:k])]


def sf_k(
    T: SimplicialCurrent,
    p: int,
    r: float,
    k: int,
    candidates: int = 8,
    grid: int = 16,
    context: BallContext | None = None,
):
    """Best sliced filling over witness tuples on the discrete sphere.

    Searches deterministically within an evaluation budget; the returned
    value is a certified lower bound for the supremum.  Returns the report
    of the best tuple found.
    """
    ctx = context or ball_context(T, p, r)
    if k == 0:
        return sliced_fill(T, p, r, witnesses=(), grid=grid, context=ctx)
    sphere = ctx.sphere_vertices()
    if not sphere:
        rep = SlicedFillReport(
            center=p, radius=r, grid_axes=[], values=np.zeros(1), integral=0.0,
            lipschitz=[1.0] * k, mass_lower_bound=0.0, ball_mass=mass(ctx.current),
        )
        rep.warnings.append("discrete sphere is empty")
        return rep
    best = None
    for wit in _witness_tuples(sphere, k, candidates):
        rep = sliced_fill(T, p, r, witnesses=wit, grid=grid, context=ctx)
        if best is None or rep.integral > best.integral:
            best = rep
    return best


def tetra_check(
    T: SimplicialCurrent,
    p: int,
    r: float,
    C: float,
    beta: float,
    samples: int = 5,
    candidates: int = 6,
    context: BallContext | None = None,
) -> TetraReport:
    """Pointwise and integral tetrahedral checks over the level band.

    Witness tuples are searched to maximize the band integral of h; the
    pointwise flag needs h >= C r at every sampled node, the integral flag
    needs the band integral to reach C (2 beta)^(m-1) r^m.
    """
    if C <= 0 or not (0 < beta < 1):
        raise ArgumentError("need C > 0 and beta in (0, 1)")
    ctx = context or ball_context(T, p, r)
    m = T.dim
    k = m - 1
    sphere = ctx.sphere_vertices()
    band = np.linspace((1 - beta) * r, (1 + beta) * r, samples)
    merge_tol = POINT_MERGE_REL * r
    required = C * (2 * beta) ** k * r**m

    def band_integral(wit):
        fns = [distance_function(ctx.complex, w) for w in wit]
        vals, _ = _tensor_eval(
            ctx.current, fns, [band] * k, lambda cur: h_min_distance(cur, merge_tol)
        )
        return vals

    best_wit, best_vals, best_int = (), np.zeros([samples] * max(k, 1)), 0.0
    if not sphere and k > 0:
        warnings = ["discrete sphere is empty"]
    else:
        warnings = []
        for wit in _witness_tuples(sphere, k, candidates):
            vals = band_integral(wit)
            integral = _tensor_trapezoid(vals, [band] * k) if k else float(vals.reshape(-1)[0])
            if best_wit == () or integral > best_int:
                best_wit, best_vals, best_int = wit, vals, integral
    passed = bool(best_vals.min() >= C * r) if best_vals.size else False
    integral_passed = bool(best_int >= required)
    ball_m = mass(ctx.current)
    report = TetraReport(
        center=p,
        radius=r,
        witnesses=best_wit,
        C=C,
        beta=beta,
        grid_axes=[band] * k,
        h_values=best_vals,
        passed=passed,
        integral_passed=integral_passed,
        integral=best_int,
        required_integral=required,
        ball_mass=ball_m,
        warnings=warnings,
    )
    if (passed or integral_passed) and ball_m + 1e-9 < required:
        report.warnings.append(
            f"ball mass {ball_m} below the tetra volume bound {required}"
        )
    return report


def euclidean_h_closed_form(t1, t2, witness_cos=0.5):
    """Closed-form h in Euclidean 3-space on the unit ball, for witnesses on
    the unit sphere with given mutual cosine; the oracle behind the module
    constants."""
    c1 = 1.0 - np.asarray(t1, dtype=float) ** 2 / 2.0
    c2 = 1.0 - np.asarray(t2, dtype=float) ** 2 / 2.0
    u = witness_cos
    par = (c1**2 + c2**2 - 2 * u * c1 * c2) / (1 - u**2)
    return np.where(par <= 1.0, 2.0 * np.sqrt(np.maximum(1.0 - par, 0.0)), 0.0)
