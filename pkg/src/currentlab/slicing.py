"""Level-set subdivision and the slice operator on simplicial currents.

Slicing a current by a PL function at a level s is computed through the
boundary-difference formula on a refined complex in which {f <= s} is an
exact subcomplex, so the anticommutation identity between boundary and slice
holds as an integer chain identity by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complexes import (
    GeometricComplex,
    PLFunction,
    VOLUME_FLOOR,
    distance_function,
    simplex_volume_from_sq,
)
from .currents import SimplicialCurrent, boundary, mass
from .metricspace import ArgumentError

SNAP_REL = 1e-7


@dataclass
class Refinement:
    """Result of splitting a complex along a PL level set."""

    source: GeometricComplex
    complex: GeometricComplex
    level: float
    snapped: bool
    children: dict[int, dict[int, list[tuple[int, int]]]]
    cut_edges: list[tuple[int, int, float]]
    n_old_vertices: int
    dropped: int = 0
    warnings: list = field(default_factory=list)

    def transfer_current(self, T: SimplicialCurrent) -> SimplicialCurrent:
        table = self.children.get(T.dim, {})
        out: dict[int, int] = {}
        for old_idx, c in T.coeffs.items():
            for new_idx, sign in table[old_idx]:
                out[new_idx] = out.get(new_idx, 0) + c * sign
        return SimplicialCurrent(self.complex, T.dim, out)

    def transfer_function(self, f: PLFunction, own_level=False) -> PLFunction:
        old = f.values
        cut_vals = np.empty(len(self.cut_edges))
        if own_level:
            cut_vals[:] = self.level
        elif f.source is not None and f.source[0] == "dist":
            p = f.source[1]
            metric = self.complex.metric
            for i in range(len(self.cut_edges)):
                cut_vals[i] = metric.dist(p, self.n_old_vertices + i)
        else:
            for i, (u, v, t) in enumerate(self.cut_edges):
                cut_vals[i] = (1.0 - t) * old[u] + t * old[v]
        return PLFunction(self.complex, np.concatenate([old, cut_vals]), source=f.source)


@dataclass
class SliceResult:
    current: SimplicialCurrent
    levels: tuple[float, ...]
    functions: list[PLFunction]
    refinement: Refinement | None
    warnings: list = field(default_factory=list)

    @property
    def complex(self):
        return self.current.complex


def snap_level(values, s, snap_rel=SNAP_REL):
    """Move s off vertex values; returns (level, snapped?, warning or None).

    Vertex values within 2*tol of each other are treated as one cluster and
    the level is pushed just past the cluster, towards the interior of the
    value range when the cluster contains an extreme value.
    """
    uniq = np.unique(np.asarray(values, dtype=float))
    if len(uniq) == 0:
        return float(s), False, None
    rng = float(uniq[-1] - uniq[0]) if len(uniq) > 1 else 1.0
    tol = snap_rel * (rng if rng > 0 else 1.0)
    if len(uniq) == 1:
        clusters = [(float(uniq[0]), float(uniq[0]))]
    else:
        breaks = np.where(np.diff(uniq) > 2 * tol)[0]
        starts = np.concatenate([[0], breaks + 1])
        ends = np.concatenate([breaks, [len(uniq) - 1]])
        clusters = [(float(uniq[a]), float(uniq[b])) for a, b in zip(starts, ends)]
    for clo, chi in clusters:
        if clo - tol < s < chi + tol:
            up, down = chi + tol, clo - tol
            if clo <= uniq[0]:
                moved = up
            elif chi >= uniq[-1]:
                moved = down
            elif s - down <= up - s:
                moved = down
            else:
                moved = up
            return float(moved), True, f"level {s} snapped to {moved} (vertex-value collision)"
    return float(s), False, None


def _quad_triangles(a, b, c, d):
    """Split the cycle (a,b,c,d) along the diagonal through its smallest id."""
    m = min(a, b, c, d)
    if m == a or m == c:
        return [(a, b, c), (a, c, d)]
    return [(a, b, d), (b, c, d)]


def _prism_tets(t0, t1):
    """Triangulate a prism given matching triangles; canonical in global ids."""
    six = list(t0) + list(t1)
    apex = min(six)
    tris = [tuple(t0), tuple(t1)]
    for i, j in ((0, 1), (0, 2), (1, 2)):
        tris.extend(_quad_triangles(t0[i], t0[j], t1[j], t1[i]))
    return [(apex,) + tri for tri in tris if apex not in tri]


def _split_pieces(simplex, below_mask, cut):
    """Children (as unsorted vertex tuples) of a crossing simplex.

    `cut[(u, v)]` is the id of the point where the level crosses edge {u,v}.
    Returns (below_children, above_children).
    """
    k = len(simplex) - 1
    below = [v for v, b in zip(simplex, below_mask) if b]
    above = [v for v, b in zip(simplex, below_mask) if not b]

    def cut_of(u, v):
        return cut[(u, v) if u < v else (v, u)]

    if k == 1:
        u, v = below[0], above[0]
        c = cut_of(u, v)
        return [(u, c)], [(c, v)]
    if k == 2:
        if len(below) == 1:
            w = below[0]
            x, y = above
            p, q = cut_of(w, x), cut_of(w, y)
            return [(w, p, q)], _quad_triangles(p, x, y, q)
        w, x = below
        y = above[0]
        p, q = cut_of(w, y), cut_of(x, y)
        return _quad_triangles(w, x, q, p), [(p, q, y)]
    if k == 3:
        if len(below) == 1 or len(above) == 1:
            flip = len(above) == 1
            lone = above[0] if flip else below[0]
            rest = below if flip else above
            cuts = [cut_of(lone, v) for v in rest]
            tet = [(lone,) + tuple(cuts)]
            prism = _prism_tets(tuple(cuts), tuple(rest))
            return (prism, tet) if flip else (tet, prism)
        w1, w2 = below
        x, y = above
        below_prism = _prism_tets((w1, cut_of(w1, x), cut_of(w1, y)), (w2, cut_of(w2, x), cut_of(w2, y)))
        above_prism = _prism_tets((x, cut_of(w1, x), cut_of(w2, x)), (y, cut_of(w1, y), cut_of(w2, y)))
        return below_prism, above_prism
    raise ArgumentError(f"level-set subdivision implemented for simplices of dimension <= 3, got {k}")


def subdivide_at_level(C: GeometricComplex, values, s, snap_rel=SNAP_REL) -> Refinement:
    """Split every simplex crossing {f = s} so {f <= s} becomes a subcomplex.

    Per-simplex volume is preserved by construction (children partition their
    parent); shared faces of neighbouring simplices are split identically via
    canonical global-id rules.
    """
    values = np.asarray(values, dtype=float)
    level, snapped, warning = snap_level(values, s, snap_rel)
    warnings = [warning] if warning else []

    n_old = C.n_vertices
    below_vertex = values < level

    cut: dict[tuple[int, int], int] = {}
    cut_edges: list[tuple[int, int, float]] = []
    raw_points = []
    next_id = n_old
    for (u, v) in C.simplices.get(1, []):
        if below_vertex[u] != below_vertex[v]:
            lo, hi = (u, v) if below_vertex[u] else (v, u)
            t = (level - values[lo]) / (values[hi] - values[lo])
            t_edge = t if (u, v) == (lo, hi) else 1.0 - t
            cut[(u, v)] = next_id
            cut_edges.append((u, v, t_edge))
            raw_points.append(((u, v), t_edge))
            next_id += 1

    metric = C.metric.copy()
    if cut_edges:
        specs = [metric.interpolate((u, v), (1.0 - t, t)) for (u, v, t) in cut_edges]
        metric.add_points(specs)

    children_tuples: dict[int, dict[int, list[tuple[int, ...]]]] = {}
    dropped = 0
    for k in C.dims:
        table: dict[int, list[tuple[int, ...]]] = {}
        for idx, simplex in enumerate(C.simplices[k]):
            if k == 0:
                table[idx] = [simplex]
                continue
            mask = [bool(below_vertex[v]) for v in simplex]
            if all(mask) or not any(mask):
                table[idx] = [simplex]
                continue
            lo_pieces, hi_pieces = _split_pieces(simplex, mask, cut)
            table[idx] = lo_pieces + hi_pieces
        children_tuples[k] = table

    # barycentric coordinates of every vertex relative to a parent simplex
    bary_cache = {gid - n_old: (edge, t) for gid, (edge, t) in
                  zip(range(n_old, next_id), raw_points)}

    def bary_in(parent, gid):
        coords = np.zeros(len(parent))
        if gid < n_old:
            coords[parent.index(gid)] = 1.0
        else:
            (u, v), t = bary_cache[gid - n_old]
            coords[parent.index(u)] = 1.0 - t
            coords[parent.index(v)] = t
        return coords

    # assemble simplex lists: children plus faces of higher-dimensional children
    new_lists: dict[int, list[tuple[int, ...]]] = {}
    face_pool: dict[int, set] = {k: set() for k in C.dims}
    for k in sorted(C.dims, reverse=True):
        pool = face_pool[k]
        for table in (children_tuples[k],):
            for pieces in table.values():
                pool.update(tuple(sorted(p)) for p in pieces)
        for s_tuple in pool:
            if k >= 1:
                for i in range(len(s_tuple)):
                    face_pool[k - 1].add(s_tuple[:i] + s_tuple[i + 1 :])
        new_lists[k] = sorted(pool)

    new_complex = GeometricComplex(metric, new_lists)

    # reuse volumes of untouched simplices
    old_masses = {k: C.masses(k) for k in C.dims}
    for k in C.dims:
        old_index = C.index(k)
        vols = np.empty(new_complex.count(k))
        for i, s_tuple in enumerate(new_lists[k]):
            j = old_index.get(s_tuple)
            vols[i] = old_masses[k][j] if j is not None else simplex_volume_from_sq(
                metric.pairwise_sq(s_tuple)
            )
        new_complex._masses[k] = vols

    # signed children mapping with volume-fraction sanity check
    children: dict[int, dict[int, list[tuple[int, int]]]] = {}
    for k in C.dims:
        table = {}
        index = new_complex.index(k)
        for idx, pieces in children_tuples[k].items():
            parent = C.simplices[k][idx]
            if len(pieces) == 1 and tuple(sorted(pieces[0])) == parent:
                table[idx] = [(index[parent], 1)]
                continue
            entries = []
            frac = 0.0
            for piece in pieces:
                key = tuple(sorted(piece))
                rows = np.array([bary_in(parent, g) for g in key])
                det = float(np.linalg.det(rows))
                frac += abs(det)
                if abs(det) < VOLUME_FLOOR:
                    dropped += 1
                    continue
                entries.append((index[key], 1 if det > 0 else -1))
            if abs(frac - 1.0) > 1e-6:
                warnings.append(
                    f"split of {parent} covers volume fraction {frac} (expected 1)"
                )
            table[idx] = entries
        children[k] = table

    return Refinement(
        source=C,
        complex=new_complex,
        level=level,
        snapped=snapped,
        children=children,
        cut_edges=cut_edges,
        n_old_vertices=n_old,
        dropped=dropped,
        warnings=warnings,
    )


def _sublevel_indicator(complex, dim, values, level):
    bary = complex.barycenter_values(dim, values)
    return bary < level


def support_closure(T: SimplicialCurrent) -> SimplicialCurrent:
    """The same current re-rooted on the face closure of its support.

    Vertex ids and the metric are shared with the parent complex, so vertex
    functions and distance rows stay valid; only the simplex lists shrink,
    which keeps later subdivisions proportional to the support size.
    """
    from .complexes import close_under_faces

    if T.is_zero():
        C2 = GeometricComplex(T.complex.metric, {k: [] for k in T.complex.dims})
        return SimplicialCurrent(C2, T.dim, {})
    tops = T.support_simplices()
    sub = close_under_faces(tops)
    for k in range(T.dim + 1):
        sub.setdefault(k, [])
    C2 = GeometricComplex(T.complex.metric, sub)
    for k in sub:
        parent_index = T.complex.index(k)
        parent_masses = T.complex.masses(k)
        vols = np.empty(C2.count(k))
        for i, s in enumerate(C2.simplices[k]):
            vols[i] = parent_masses[parent_index[s]]
        C2._masses[k] = vols
    index = C2.index(T.dim)
    coeffs = {index[T.simplex(i)]: c for i, c in T.coeffs.items()}
    return SimplicialCurrent(C2, T.dim, coeffs)


def restrict_sublevel(T: SimplicialCurrent, f: PLFunction, s, side="below") -> SimplicialCurrent:
    """Exact restriction of T to {f <= s} (or {f >= s}) after refinement."""
    ref = subdivide_at_level(T.complex, f.values, s)
    T2 = ref.transfer_current(T)
    keep = _sublevel_indicator(ref.complex, T.dim, ref.transfer_function(f, own_level=True).values, ref.level)
    if side == "above":
        keep = ~keep
    coeffs = {i: c for i, c in T2.coeffs.items() if keep[i]}
    return SimplicialCurrent(ref.complex, T.dim, coeffs)


def slice_current(T: SimplicialCurrent, f: PLFunction, s) -> SliceResult:
    """The slice of T by f at level s: boundary of the sublevel restriction
    minus the restriction of the boundary, on the refined complex."""
    if T.dim < 1:
        raise ArgumentError("slicing needs a current of dimension >= 1")
    ref = subdivide_at_level(T.complex, f.values, s)
    T2 = ref.transfer_current(T)
    f2 = ref.transfer_function(f, own_level=True)
    keep_k = _sublevel_indicator(ref.complex, T.dim, f2.values, ref.level)
    restricted = SimplicialCurrent(
        ref.complex, T.dim, {i: c for i, c in T2.coeffs.items() if keep_k[i]}
    )
    bdry = boundary(T2)
    keep_b = _sublevel_indicator(ref.complex, T.dim - 1, f2.values, ref.level)
    bdry_restricted = SimplicialCurrent(
        ref.complex, T.dim - 1, {i: c for i, c in bdry.coeffs.items() if keep_b[i]}
    )
    sliced = boundary(restricted) - bdry_restricted
    warnings = list(ref.warnings)
    flat = _flat_region_mass(ref.complex, T2, f2.values, float(s))
    if flat > 0:
        warnings.append(f"non-generic level: function is flat at the level on mass {flat}")
    return SliceResult(
        current=sliced,
        levels=(ref.level,),
        functions=[f2],
        refinement=ref,
        warnings=warnings,
    )


def _flat_region_mass(complex, T, values, level):
    total = 0.0
    w = complex.masses(T.dim)
    for i, c in T.coeffs.items():
        s_tuple = complex.simplices[T.dim][i]
        if all(values[v] == level for v in s_tuple):
            total += abs(c) * w[i]
    return total


def iterated_slice(T: SimplicialCurrent, functions, levels) -> SliceResult:
    """Left-to-right iteration of the slice operator."""
    functions = list(functions)
    levels = list(levels)
    if len(functions) != len(levels):
        raise ArgumentError("need one level per slicing function")
    if len(functions) > T.dim:
        raise ArgumentError("cannot slice more times than the current's dimension")
    current = T
    fns = functions
    used_levels: list[float] = []
    warnings: list = []
    last_ref = None
    for j in range(len(fns)):
        result = slice_current(current, fns[j], levels[j])
        current = result.current
        used_levels.append(result.levels[0])
        warnings.extend(result.warnings)
        last_ref = result.refinement
        fns = fns[: j + 1] + [result.refinement.transfer_function(g) for g in fns[j + 1 :]]
    return SliceResult(
        current=current,
        levels=tuple(used_levels),
        functions=fns,
        refinement=last_ref,
        warnings=warnings,
    )


def coarea_profile(T: SimplicialCurrent, f: PLFunction, samples: int):
    """Trapezoid quadrature of level -> slice mass against the Lipschitz bound.

    Returns (integral, bound) with bound = Lip(f) * mass(T).
    """
    if samples < 2:
        raise ArgumentError("coarea needs at least 2 samples")
    lo, hi = f.range()
    bound = f.lip * mass(T)
    if hi <= lo:
        return 0.0, bound
    grid = np.linspace(lo, hi, samples)
    masses = np.array([mass(slice_current(T, f, s).current) for s in grid])
    integral = float(np.trapezoid(masses, grid))
    return integral, bound


def ball(T: SimplicialCurrent, p: int, r: float, mode="auto") -> SimplicialCurrent:
    """Subdivided restriction of T to the open metric ball around vertex p."""
    if r <= 0:
        raise ArgumentError("ball radius must be positive")
    rho = distance_function(T.complex, p, mode=mode)
    return restrict_sublevel(T, rho, r, side="below")


def sphere(T: SimplicialCurrent, p: int, r: float, mode="auto") -> SliceResult:
    """Slice of T by the distance function from p at radius r."""
    rho = distance_function(T.complex, p, mode=mode)
    return slice_current(T, rho, r)


def annulus_mass(T: SimplicialCurrent, f: PLFunction, a: float, b: float) -> float:
    """Mass of T restricted to {a < f < b}, computed exactly by refinement."""
    if b <= a:
        return 0.0
    ref1 = subdivide_at_level(T.complex, f.values, a)
    T1 = ref1.transfer_current(T)
    f1 = ref1.transfer_function(f, own_level=True)
    keep = ~_sublevel_indicator(ref1.complex, T.dim, f1.values, ref1.level)
    T1 = SimplicialCurrent(
        ref1.complex, T.dim, {i: c for i, c in T1.coeffs.items() if keep[i]}
    )
    ref2 = subdivide_at_level(ref1.complex, f1.values, b)
    T2 = ref2.transfer_current(T1)
    f2 = ref2.transfer_function(f1, own_level=True)
    keep2 = _sublevel_indicator(ref2.complex, T.dim, f2.values, ref2.level)
    T2 = SimplicialCurrent(
        ref2.complex, T.dim, {i: c for i, c in T2.coeffs.items() if keep2[i]}
    )
    return mass(T2)
