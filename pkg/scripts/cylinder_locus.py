"""Tangency residual around the boundary circle of the cylinder tube, with the predicted locus.

For each c the script walks the circle y0^2 + y1^2 = eps^2 and records the
tangency residual of the action z -> z + (ct, t) together with the value of
the locus jet returned by ``cg_locus``; both vanish at the same two angles.

    python scripts/cylinder_locus.py --cs -2 -1 0 0.5 1 2 --points 72 --out locus.csv
"""

import argparse
import csv
import math
import sys

from leviprobe.group_action import cg_locus, check_tangency, cylinder_phic
from leviprobe.harness import cylinder_locus_point
from leviprobe.hypersurface import cylinder
from leviprobe.jetcalc import Jet


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cs", type=float, nargs="+", default=[-2.0, -1.0, 0.0, 0.5, 1.0, 2.0])
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--points", type=int, default=72)
    ap.add_argument("--out")
    args = ap.parse_args(argv)
    df = cylinder(args.eps)
    phi = Jet.var(1, 4) ** 2 + Jet.var(3, 4) ** 2
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["c", "offset", "y0", "y1", "locus_value", "tangency_residual", "tangent"])
    for c in args.cs:
        G = cylinder_phic(c)
        locus = cg_locus(phi, G).normalized[0]
        for k in range(args.points):
            offset = 2 * math.pi * k / args.points
            p = cylinder_locus_point(c, args.eps, offset)
            rep = check_tangency(G, df, p)
            w.writerow([c, offset, p[1], p[3], float(locus.evaluate(p)), float(rep.residuals[0]), rep.passed])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
