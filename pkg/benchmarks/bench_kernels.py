"""Time the numba kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import os
import time
import warnings

import numpy as np

from drivenqbm import BandPair, Driving, SpectralModel, _kernels
from drivenqbm.correlators import BandResponse
from drivenqbm.entanglement import cycle_times
from drivenqbm.oracle import band_bath, band_covariance_series


def _timed(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _with_flag(flag, fn, repeat):
    old = os.environ.get("DRIVENQBM_NUMBA")
    os.environ["DRIVENQBM_NUMBA"] = flag
    try:
        return _timed(fn, repeat)
    finally:
        if old is None:
            os.environ.pop("DRIVENQBM_NUMBA")
        else:
            os.environ["DRIVENQBM_NUMBA"] = old


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    model, drv = SpectralModel(), Driving()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pair = BandPair(3.9, 0.05, allow_overlap=True)
    times = cycle_times(4000.0, drv.omega_d, 16)

    def continuum():
        return BandResponse(model, drv, pair, k_max=4).covariances(times)

    bath = band_bath(model, drv, pair)

    def rows():
        return band_covariance_series(bath, drv, 200 * drv.period, steps_per_period=160,
                                      record_periods=50)[1]

    print(f"numba available: {_kernels.HAVE_NUMBA}")
    _with_flag("1", continuum, 1)  # compile
    _with_flag("1", rows, 1)
    for name, fn in (("continuum covariance, 17 times, t=4000", continuum),
                     (f"adjoint rows, N={bath.N}, 32000 steps", rows)):
        tn, a = _with_flag("1", fn, args.repeat)
        tp, b = _with_flag("0", fn, 1)
        diff = np.max(np.abs(a - b)) / np.max(np.abs(b))
        print(f"{name}: numba {tn:.2f} s, numpy {tp:.2f} s, speedup {tp / tn:.1f}x, "
              f"max rel diff {diff:.1e}")


if __name__ == "__main__":
    main()
