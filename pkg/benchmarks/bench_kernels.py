"""Compare the compiled and numpy mask kernels.

    python benchmarks/bench_kernels.py [--sizes 256 512 1024] [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from fencemask import kernels
from fencemask.analysis import synthesize_small_object_corpus
from fencemask.geometry import FenceConfig, _family, generate_fence_mask


def cases(size):
    fam_a = _family(3, 9, 17.0, 4.5)
    fam_b = _family(2, 11, 104.0, 1.0)
    keep = np.random.default_rng(0).random((size, size)) < 0.7
    boxes = np.array([b.as_tuple() for b in synthesize_small_object_corpus(size, 16, 20, 1, 0).images[0].boxes])
    cfg = FenceConfig()
    return {
        "stripe_keep": lambda: kernels.stripe_keep(size, size, *fam_a),
        "fence_keep": lambda: kernels.fence_keep(size, size, fam_a, fam_b),
        "box_occluded_counts": lambda: kernels.box_occluded_counts(keep, boxes),
        "generate_fence_mask": lambda: generate_fence_mask(cfg, size, size, 1),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 512, 1024])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    backends = kernels.available_backends()
    if "native" not in backends:
        print("compiled kernels not built; only the numpy backend is available")
    print(f"{'kernel':<22}{'size':>6}" + "".join(f"{b + ' ms':>13}" for b in backends) + f"{'speedup':>10}")
    for size in args.sizes:
        for name in cases(size):
            times = {}
            for b in backends:
                kernels.use_backend(b)
                fn = cases(size)[name]
                fn()
                times[b] = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
            speedup = times["python"] / times["native"] if "native" in times else float("nan")
            print(f"{name:<22}{size:>6}" + "".join(f"{times[b]:>13.3f}" for b in backends) + f"{speedup:>9.1f}x")


if __name__ == "__main__":
    main()
