"""Constructed sequence families, common embeddings, and convergence sweeps.

Flat distances are always computed inside an explicitly constructed common
complex (disjoint union glued through a correspondence), so every reported
distance is an upper bound for the intrinsic one and every asserted
inequality compares quantities computed in one ambient chain complex.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complexes import (
    ComplexError,
    GeometricComplex,
    MatrixMetric,
    distance_function,
    simplex_volume_from_sq,
)
from .currents import SimplicialCurrent, boundary, mass, push_forward
from .fillvol import filling_volume, flat_distance
from .metricspace import ArgumentError, FiniteMetricSpace
from .meshes import add_spikes, disk_mesh, full_torus_mesh, nearest_vertex, sphere_mesh
from .product import interval_filling_volume, sliced_interval_fill
from .slicing import subdivide_at_level, _sublevel_indicator
from .slicedfill import ball_context, sliced_fill


@dataclass
class SequenceFamily:
    name: str
    schedule: list
    generator: object
    expected_limit: tuple | None = None
    meta: dict = field(default_factory=dict)

    def members(self):
        return [self.generator(p) for p in self.schedule]


def build_family(name: str, schedule) -> SequenceFamily:
    """Deterministic example families.

    refined_disk: mesh sizes h, flat unit disks.
    refined_sphere: latitude counts, geodesic unit spheres.
    sphere_splines: spike counts j, Euclidean sphere with j thin fins of
        width 1/j^2; the limit member is the bare sphere.
    thin_torus: eps values, flat 3-torus with circumferences
        (2 pi, 2 pi, 2 eps).
    """
    schedule = list(schedule)
    if not schedule:
        raise ArgumentError("schedule must be nonempty")
    if name == "refined_disk":
        gen = lambda h: disk_mesh(h=h)
        return SequenceFamily(name, schedule, gen, expected_limit=gen(min(schedule)))
    if name == "refined_sphere":
        gen = lambda n: sphere_mesh(int(n), 2 * int(n))
        return SequenceFamily(name, schedule, gen, expected_limit=gen(max(schedule)))
    if name == "sphere_splines":
        base = sphere_mesh(16, 32, metric="euclidean")
        tips: dict = {}
        base_pts: dict = {}

        def gen(j):
            j = int(j)
            C, T, tip_ids, base_ids = add_spikes(base[0], base[1], j, width=1.0 / j**2)
            tips[j] = tip_ids
            base_pts[j] = base_ids
            return C, T

        fam = SequenceFamily(name, schedule, gen, expected_limit=base)
        fam.meta["tips"] = tips
        fam.meta["bases"] = base_pts
        return fam
    if name == "thin_torus":
        gen = lambda eps: full_torus_mesh(eps, cells=(6, 6, 4))
        return SequenceFamily(name, schedule, gen, expected_limit=None)
    raise ArgumentError(f"unknown family {name!r}")


# ---------------------------------------------------------------------------
# common embeddings


@dataclass
class CommonEmbedding:
    ambient: FiniteMetricSpace
    inject_a: list[int]
    inject_b: list[int]
    correspondence: list[tuple[int, int]]
    delta: float
    distortion: float


def _full_matrix(metric):
    n = metric.n
    mat = np.zeros((n, n))
    for i in range(n):
        mat[i] = metric.row(i)
    return 0.5 * (mat + mat.T)


def nearest_vertex_correspondence(CA: GeometricComplex, CB: GeometricComplex):
    """Match every vertex of each complex with its nearest in the other."""
    pa = CA.coords()
    pb = CB.coords()
    if pa is None or pb is None:
        raise ArgumentError("nearest-vertex matching needs coordinates")
    pairs = []
    for a in range(len(pa)):
        pairs.append((a, int(np.argmin(np.linalg.norm(pb - pa[a], axis=1)))))
    for b in range(len(pb)):
        pairs.append((int(np.argmin(np.linalg.norm(pa - pb[b], axis=1))), b))
    seen: set = set()
    out = []
    for pr in pairs:
        if pr not in seen:
            seen.add(pr)
            out.append(pr)
    return out


def common_embed(CA: GeometricComplex, CB: GeometricComplex, correspondence=None, delta=None) -> CommonEmbedding:
    """Glue two vertex metrics through a correspondence.

    Cross distances are inf over matched pairs (x, y) of
    d_A(a, x) + delta + d_B(y, b); delta below half the correspondence
    distortion is rejected, and the glued matrix is fully validated (the
    first violating triple is reported).
    """
    DA = _full_matrix(CA.metric)
    DB = _full_matrix(CB.metric)
    if correspondence is None:
        correspondence = nearest_vertex_correspondence(CA, CB)
    pairs = list(correspondence)
    if not pairs:
        raise ArgumentError("correspondence must be nonempty")
    xs = [x for x, _ in pairs]
    ys = [y for _, y in pairs]
    sub = np.abs(DA[np.ix_(xs, xs)] - DB[np.ix_(ys, ys)])
    dis = float(sub.max())
    if delta is None:
        delta = dis / 2.0 + 1e-9
    if delta < dis / 2.0:
        raise ArgumentError(f"delta {delta} below half the correspondence distortion {dis / 2}")
    na, nb = len(DA), len(DB)
    cross = np.full((na, nb), np.inf)
    for (x, y) in pairs:
        cross = np.minimum(cross, DA[:, x][:, None] + delta + DB[y, :][None, :])
    big = np.zeros((na + nb, na + nb))
    big[:na, :na] = DA
    big[na:, na:] = DB
    big[:na, na:] = cross
    big[na:, :na] = cross.T
    ambient = FiniteMetricSpace(big, validate=True)
    return CommonEmbedding(
        ambient=ambient,
        inject_a=list(range(na)),
        inject_b=list(range(na, na + nb)),
        correspondence=pairs,
        delta=delta,
        distortion=dis,
    )


def joined_complex(CA, TA, CB, TB, correspondence=None, delta=None, mode="auto"):
    """One complex containing both meshes plus connector prisms.

    Returns (K, TA_in_K, TB_in_K, embedding, dropped).  In "natural" mode
    (default whenever both meshes carry coordinates in the same space) the
    ambient is the shared Euclidean space, every injection is exactly
    isometric, and connector prisms between matched simplices are genuine
    Euclidean simplices (possibly of zero volume when the meshes are
    coplanar, which makes them free fillers for the flat-norm programs).
    In "glue" mode the two vertex metrics are joined through the
    delta-weighted correspondence; the glued metric is degenerate across
    the seam, so cross prisms that fail flat realizability are dropped
    (they never carry the input currents).
    """
    from .complexes import EuclideanMetric

    pa, pb = CA.coords(), CB.coords()
    if mode == "auto":
        natural = (
            pa is not None
            and pb is not None
            and isinstance(CA.metric, EuclideanMetric)
            and isinstance(CB.metric, EuclideanMetric)
            and pa.shape[1] == pb.shape[1]
        )
    else:
        natural = mode == "natural"
    na = CA.n_vertices
    if correspondence is None:
        correspondence = nearest_vertex_correspondence(CA, CB)
    if natural:
        coords = np.vstack([pa, pb])
        metric = EuclideanMetric(coords)
        ambient = FiniteMetricSpace.from_points(coords)
        emb = CommonEmbedding(
            ambient=ambient,
            inject_a=list(range(na)),
            inject_b=list(range(na, na + CB.n_vertices)),
            correspondence=list(correspondence),
            delta=0.0,
            distortion=0.0,
        )
    else:
        emb = common_embed(CA, CB, correspondence, delta)
        metric = MatrixMetric(emb.ambient.dist.copy())
    match: dict[int, int] = {}
    for (a, b) in emb.correspondence:
        match.setdefault(a, b)
    dim = CA.top_dim
    tops = list(CA.simplices[dim])
    tops += [tuple(v + na for v in s) for s in CB.simplices[CB.top_dim]]
    dropped = 0
    for s in CA.simplices[dim]:
        image = [match.get(v) for v in s]
        if any(v is None for v in image):
            continue
        bottom = list(s)
        top = [v + na for v in image]
        for i in range(dim + 1):
            prism = tuple(bottom[: i + 1] + top[i:])
            if len(set(prism)) != len(prism):
                continue
            try:
                simplex_volume_from_sq(metric.pairwise_sq(tuple(sorted(prism))))
                tops.append(prism)
            except ComplexError:
                dropped += 1
    if natural:
        # cone fillers from one apex over every top simplex: genuine
        # Euclidean simplices, so any top-dimensional cycle bounds in K at
        # its honest ambient cost
        apex = 0
        cones = []
        for s in CA.simplices[dim]:
            if apex not in s:
                cones.append(tuple(sorted((apex,) + s)))
        for s in CB.simplices[CB.top_dim]:
            cones.append(tuple(sorted((apex,) + tuple(v + na for v in s))))
        tops.extend(cones)
    K = GeometricComplex.from_top_simplices(metric, tops)
    TA_K = push_forward(TA, list(range(na)), K)
    TB_K = push_forward(TB, [v + na for v in range(CB.n_vertices)], K)
    return K, TA_K, TB_K, emb, dropped


def matched_balls(K, TA_K, TB_K, pa, pb, r):
    """Both currents restricted to open balls, on one shared refinement of K.

    Returns (ball_A, ball_B) living on the same complex.
    """
    rho_a = distance_function(K, pa)
    rho_b = distance_function(K, pb)
    ref1 = subdivide_at_level(K, rho_a.values, r)
    TA1 = ref1.transfer_current(TA_K)
    TB1 = ref1.transfer_current(TB_K)
    rho_a1 = ref1.transfer_function(rho_a, own_level=True)
    rho_b1 = ref1.transfer_function(rho_b)
    ref2 = subdivide_at_level(ref1.complex, rho_b1.values, r)
    TA2 = ref2.transfer_current(TA1)
    TB2 = ref2.transfer_current(TB1)
    rho_a2 = ref2.transfer_function(rho_a1)
    rho_b2 = ref2.transfer_function(rho_b1, own_level=True)
    K2 = ref2.complex
    keep_a = _sublevel_indicator(K2, TA2.dim, rho_a2.values, ref1.level)
    keep_b = _sublevel_indicator(K2, TB2.dim, rho_b2.values, ref2.level)
    ball_a = SimplicialCurrent(K2, TA2.dim, {i: c for i, c in TA2.coeffs.items() if keep_a[i]})
    ball_b = SimplicialCurrent(K2, TB2.dim, {i: c for i, c in TB2.coeffs.items() if keep_b[i]})
    return ball_a, ball_b


# ---------------------------------------------------------------------------
# reports


def diameter_of(C: GeometricComplex) -> float:
    worst = 0.0
    for i in range(C.n_vertices):
        worst = max(worst, float(np.max(C.metric.row(i))))
    return worst


def semicontinuity_report(family: SequenceFamily, tolerance=1e-9) -> dict:
    """Mass and diameter along the schedule against the expected limit."""
    if family.expected_limit is None:
        raise ArgumentError("semicontinuity report needs an expected limit")
    CL, TL = family.expected_limit
    limit_mass = mass(TL)
    limit_diam = diameter_of(CL)
    rows = []
    for param in family.schedule:
        C, T = family.generator(param)
        m = mass(T)
        d = diameter_of(C)
        rows.append(
            {
                "param": param,
                "mass": m,
                "diameter": d,
                "mass_ok": bool(m >= limit_mass - tolerance),
                "diameter_ok": bool(d >= limit_diam - tolerance),
            }
        )
    last = rows[-1]
    return {
        "family": family.name,
        "limit_mass": limit_mass,
        "limit_diameter": limit_diam,
        "rows": rows,
        "passed": bool(last["mass_ok"] and last["diameter_ok"]),
    }


def _member_value(C, T, quantity, params):
    r = params.get("radius", 0.5)
    center = params.get("center_point")
    p = nearest_vertex(C, center) if center is not None else int(params.get("center", 0))
    if quantity == "fillvol":
        ctx = ball_context(T, p, r)
        return filling_volume(boundary(ctx.current), ctx.complex).value
    if quantity == "sf":
        ctx = ball_context(T, p, r)
        wp = params.get("witness_point")
        w = nearest_vertex(C, wp) if wp is not None else ctx.sphere_vertices()[0]
        rep = sliced_fill(T, p, r, witnesses=[w], grid=int(params.get("grid", 32)), context=ctx)
        return rep.integral
    if quantity == "ifv":
        return interval_filling_volume(T, float(params.get("epsilon", 0.2))).value
    if quantity == "sif":
        rep = sliced_interval_fill(
            T,
            p,
            r,
            witnesses=None,
            epsilon=float(params.get("epsilon", 0.2)),
            grid=int(params.get("grid", 8)),
        )
        return rep.integral
    raise ArgumentError(f"unknown quantity {quantity!r}")


def continuity_sweep(family: SequenceFamily, quantity: str, params=None) -> dict:
    """Quantity per member plus gap-versus-bound checks on consecutive pairs.

    For the fillvol quantity, consecutive members are joined in a common
    complex, matched balls are cut on one shared refinement, and the filling
    gap is checked against the flat distance between the balls computed in
    that same complex.
    """
    params = dict(params or {})
    members = family.members()
    threads = int(params.get("threads", 1))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(
                pool.map(lambda ct: _member_value(ct[0], ct[1], quantity, params), members)
            )
    else:
        values = [_member_value(C, T, quantity, params) for (C, T) in members]
    rows = [{"param": prm, "value": v} for prm, v in zip(family.schedule, values)]
    checks = []
    if quantity == "fillvol" and len(members) > 1:
        r = params.get("radius", 0.5)
        center = params.get("center_point", (0.0, 0.0))
        tol = params.get("tolerance", 1e-6)
        for (CA, TA), (CB, TB) in zip(members, members[1:]):
            K, TA_K, TB_K, emb, _ = joined_complex(CA, TA, CB, TB)
            pa = nearest_vertex(CA, center)
            pb = nearest_vertex(CB, center) + CA.n_vertices
            ball_a, ball_b = matched_balls(K, TA_K, TB_K, pa, pb, r)
            K2 = ball_a.complex
            fa = filling_volume(boundary(ball_a), K2).value
            fb = filling_volume(boundary(ball_b), K2).value
            bound = flat_distance(ball_a, ball_b, K2).value
            gap = abs(fa - fb)
            checks.append(
                {
                    "gap": gap,
                    "bound": bound,
                    "delta": emb.delta,
                    "ok": bool(gap <= bound + tol),
                }
            )
    return {
        "family": family.name,
        "quantity": quantity,
        "rows": rows,
        "pair_checks": checks,
        "passed": bool(all(c["ok"] for c in checks)) if checks else True,
    }
