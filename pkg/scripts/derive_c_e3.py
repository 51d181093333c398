#!/usr/bin/env python3
"""Derive the Euclidean 3-space tetrahedral constants recorded in
currentlab.slicedfill.

Setup: unit ball in E^3 centred at p, witnesses p1, p2 on the unit sphere at
mutual distance 1 (cosine 1/2).  For levels (t1, t2) the set
P = sphere(p, 1) meet sphere(p1, t1) meet sphere(p2, t2) is computed in
closed form: with c_i = 1 - t_i^2 / 2 the in-plane component of a solution
has squared norm q = (c1^2 + c2^2 - 2 u c1 c2) / (1 - u^2); when q <= 1 the
set consists of the two points reflected through the witness plane and
h = 2 sqrt(1 - q), otherwise P is empty and h = 0.

The script scans the band [1/2, 3/2]^2 (the beta = 1/2 band at r = 1):

  * pointwise minimum of h over the closed band -- this is 0, because near
    the corners (1/2, 1/2), (1/2, 3/2), (3/2, 1/2) the intersection is
    empty.  A Gram-matrix argument shows no witness configuration avoids
    this: nonemptiness over the whole band needs cos(angle) >= 17/32 at the
    corner (7/8, 7/8) of dot-product values and cos(angle) <= 0.371 at the
    mixed corner, which is impossible.  Hence no positive pointwise constant
    exists for beta = 1/2, and the pointwise constant is derived for the
    narrower band beta = 0.3 instead.

  * band integral of h -- positive; since (2 beta)^(m-1) = 1 at beta = 1/2
    this is exactly the integral tetrahedral constant of Euclidean 3-space.

Run:  python3 scripts/derive_c_e3.py [grid]
"""
import sys

import numpy as np


def h_closed_form(t1, t2, witness_cos=0.5):
    c1 = 1.0 - np.asarray(t1, dtype=float) ** 2 / 2.0
    c2 = 1.0 - np.asarray(t2, dtype=float) ** 2 / 2.0
    u = witness_cos
    q = (c1**2 + c2**2 - 2.0 * u * c1 * c2) / (1.0 - u**2)
    return np.where(q <= 1.0, 2.0 * np.sqrt(np.maximum(1.0 - q, 0.0)), 0.0)


def band_scan(lo, hi, n):
    t = np.linspace(lo, hi, n)
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    H = h_closed_form(T1, T2)
    integral = np.trapezoid(np.trapezoid(H, t, axis=1), t)
    return float(H.min()), float(integral), float((H == 0).mean())


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 4001
    print(f"grid {n} x {n}")
    mn, integral, empty = band_scan(0.5, 1.5, n)
    mn2, integral2, _ = band_scan(0.5, 1.5, (n - 1) // 2 + 1)
    richardson = abs(integral - integral2)
    print(f"beta = 1/2 band [0.5, 1.5]^2:")
    print(f"  pointwise min h          = {mn}")
    print(f"  empty-set band fraction  = {empty:.4f}")
    print(f"  band integral of h       = {integral:.9f}  (half-grid delta {richardson:.2e})")
    print(f"  -> C_E3_BAND_INTEGRAL    = {integral:.7f}")
    print(f"  -> C_E3_POINTWISE_MIN    = {mn}")
    mn3, _, _ = band_scan(0.7, 1.3, n)
    print(f"beta = 0.3 band [0.7, 1.3]^2:")
    print(f"  pointwise min h          = {mn3:.9f}")
    print(f"  -> C_E3_POINTWISE_BETA03 = {mn3:.7f}")
    print("centre value h(1,1) =", float(h_closed_form(1.0, 1.0)), "(exact 2 sqrt(2/3))")


if __name__ == "__main__":
    main()
