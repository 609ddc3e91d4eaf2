"""Compare the compiled and numpy Pauli-rotation kernels on a Trotter sweep.

    python benchmarks/bench_kernels.py --sites 8 10 12 14 --repeat 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from qbksp import _pauli_py
from qbksp.pauli import build_heisenberg, normalize
from qbksp.statevector import TrotterPlan

try:
    from qbksp._ext import pauli_kernels as _cy
except ImportError:
    _cy = None


def best_time(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sites", type=int, nargs="+", default=[8, 10, 12, 14])
    parser.add_argument("--tau", type=float, default=3.0)
    parser.add_argument("--dt", type=float, default=0.1)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    print(f"{'sites':>5} {'rotations':>9} {'numpy [s]':>10} {'cython [s]':>10} {'speedup':>8} {'max diff':>9}")
    for n in args.sites:
        ham, _ = normalize(build_heisenberg(n))
        seq = TrotterPlan(ham).sequence(args.tau, args.dt)
        rng = np.random.default_rng(n)
        psi = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
        psi /= np.linalg.norm(psi)
        ref = _pauli_py.apply_rotation_sequence(psi.copy(), *seq)
        t_py = best_time(lambda: _pauli_py.apply_rotation_sequence(psi.copy(), *seq), args.repeat)
        if _cy is None:
            print(f"{n:>5} {len(seq[0]):>9} {t_py:>10.4f} {'n/a':>10} {'n/a':>8} {'n/a':>9}")
            continue
        t_cy = best_time(lambda: _cy.apply_rotation_sequence(psi.copy(), *seq), args.repeat)
        diff = np.abs(_cy.apply_rotation_sequence(psi.copy(), *seq) - ref).max()
        print(f"{n:>5} {len(seq[0]):>9} {t_py:>10.4f} {t_cy:>10.4f} {t_py / t_cy:>7.1f}x {diff:>9.1e}")


if __name__ == "__main__":
    main()
