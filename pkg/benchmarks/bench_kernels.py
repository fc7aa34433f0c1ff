"""Compare the compiled extension kernels against the pure-numpy fallback.

Run: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from forgedetect.engine import kernels, kernels_numpy

try:
    from forgedetect.engine import _ckernels
except ImportError:
    _ckernels = None


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    x = rng.random((16, 8, 64, 64))
    cols = kernels_numpy.im2col(x, 3, 1, 1)
    dcols = rng.random(cols.shape)
    mag = rng.random((16, 16))
    ori = rng.uniform(0, 2 * np.pi, (16, 16))
    gauss = rng.random((16, 16))

    cases = [
        ("im2col (16x8x64x64, k3 s1 p1)", kernels_numpy.im2col,
         None if _ckernels is None else _ckernels.im2col, (x, 3, 1, 1)),
        ("col2im (adjoint of the above)", kernels_numpy.col2im,
         None if _ckernels is None else _ckernels.col2im, (dcols, x.shape, 3, 1, 1)),
        ("sift_hist (16x16 window)", kernels_numpy.sift_hist,
         None if _ckernels is None else _ckernels.sift_hist, (mag, ori, gauss)),
    ]
    print(f"compiled backend active: {kernels.COMPILED}")
    print(f"{'kernel':40s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, np_fn, c_fn, args in cases:
        t_np = timeit(np_fn, *args)
        if c_fn is None:
            print(f"{name:40s} {t_np * 1e3:9.2f}ms {'n/a':>10s} {'n/a':>8s}")
            continue
        t_c = timeit(c_fn, *args)
        ref, out = np_fn(*args), c_fn(*args)
        # accumulation order differs between backends; agreement is to ~1 ulp
        assert np.allclose(np.asarray(ref), np.asarray(out), rtol=0, atol=1e-12), name
        print(f"{name:40s} {t_np * 1e3:9.2f}ms {t_c * 1e3:9.2f}ms {t_np / t_c:7.2f}x")


if __name__ == "__main__":
    main()
