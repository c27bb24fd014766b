"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-N wall time per kernel and backend and the speedup.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from artimanip.affordance.features import knn
from artimanip.kernels import backends
from artimanip.scene import build_object, default_camera
from artimanip.scene.render import scene_arrays


def raycast_case():
    obj = build_object("pressure_cooker", 0)
    cam = default_camera(obj)
    args = (cam.pose.rotation, cam.pose.translation, cam.fx, cam.fy, cam.cx, cam.cy,
            cam.width, cam.height, *scene_arrays(obj))
    return lambda b: b.raycast(*args)


def pca_case(n: int = 4096, k: int = 16):
    pts = np.random.default_rng(0).normal(size=(n, 3))
    nb = knn(pts, k)
    return lambda b: b.local_pca(pts, nb)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    impls = backends()
    print(f"backends: {', '.join(sorted(impls))}")
    for name, case in (("raycast 200x150", raycast_case()), ("local_pca n=4096 k=16", pca_case())):
        times = {}
        for bname, mod in sorted(impls.items()):
            case(mod)  # warm up
            times[bname] = min(timeit.repeat(lambda: case(mod), number=1, repeat=args.repeat))
        row = "  ".join(f"{b} {t * 1e3:8.2f} ms" for b, t in times.items())
        speed = f"  speedup x{times['python'] / times['cython']:.1f}" if "cython" in times else ""
        print(f"{name:24s} {row}{speed}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
