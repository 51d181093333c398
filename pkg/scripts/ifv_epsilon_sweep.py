#!/usr/bin/env python3
"""Record the interval-filling sweep as the interval length shrinks.

For a flat unit disk the scaled interval filling eps^-1 FillVol(bd(T x I_eps))
is bounded by the disk mass pi; the sweep records how the value moves as eps
decreases.  The trend is reported, never asserted: no convergence claim is
made.

Run: python3 scripts/ifv_epsilon_sweep.py [mesh_h] [eps1,eps2,...]
"""
import sys

from currentlab.currents import mass
from currentlab.meshes import disk_mesh
from currentlab.product import interval_filling_volume


def main():
    h = float(sys.argv[1]) if len(sys.argv) > 1 else 0.12
    eps_list = (
        [float(e) for e in sys.argv[2].split(",")] if len(sys.argv) > 2 else [0.4, 0.2, 0.1, 0.05]
    )
    C, T = disk_mesh(h=h)
    print(f"disk mesh h={h}: mass {mass(T):.6f}")
    print(f"{'eps':>8} {'IFV':>12} {'IFV/eps':>12} {'mass bound':>12}")
    for eps in eps_list:
        rep = interval_filling_volume(T, eps)
        print(f"{eps:8.3f} {rep.value:12.6f} {rep.value / eps:12.6f} {mass(T):12.6f}")
    print("trend recorded; the limit is not asserted")


if __name__ == "__main__":
    main()
