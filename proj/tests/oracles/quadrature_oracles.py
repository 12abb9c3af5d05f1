"""Independent numpy oracles for the frozen constants in the C++ tests.

Run: python3 tests/oracles/quadrature_oracles.py
"""
import numpy as np
from scipy.optimize import brentq


def inviscid_hbar_1d(p, p_last, A, f, n=1 << 16):
    x = np.arange(n) / n
    drift = A * p_last * f(x)
    lo = abs(p_last) + drift.max()
    if p == 0:
        return lo

    def gap(H):
        return np.mean(np.sqrt(np.maximum((H - drift) ** 2 - p_last ** 2, 0.0))) - abs(p)

    if gap(lo) >= 0:
        return lo
    hi = np.hypot(p, p_last) + drift.max()
    return brentq(gap, lo, hi, xtol=1e-15)


def counterexample_w(a, d, n, cells=256):
    # W = (1 - d div(DPsi/S)) S with Psi = a sum sin(2 pi x_i), S = sqrt(1 + |DPsi|^2)
    g = np.meshgrid(*([np.arange(cells) / cells] * n), indexing="ij")
    k = 2 * np.pi
    grad = [a * k * np.cos(k * xi) for xi in g]
    hess = [-a * k * k * np.sin(k * xi) for xi in g]
    s2 = 1 + sum(gi ** 2 for gi in grad)
    s = np.sqrt(s2)
    lap = sum(hess)
    quad = sum(gi ** 2 * hi for gi, hi in zip(grad, hess))
    div = lap / s - quad / s ** 3
    return (1 - d * div) * s


if __name__ == "__main__":
    bump = lambda x: np.cos(2 * np.pi * x) - 1
    for P in [(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]:
        print("inviscid cos-1 A=0.5 P=%s: %.15f" % (P, inviscid_hbar_1d(P[0], P[1], 0.5, bump)))
    print("inviscid A=0 P=(0.75,1): %.15f" % inviscid_hbar_1d(0.75, 1.0, 0.0, bump))
    w = counterexample_w(1.0, 1.0, 2)
    print("counterexample a=1 d=1 n=2: min W = %.12f, W(0) = %.12f" % (w.min(), w.flat[0]))
    for a in [0.01, 0.02, 0.04, 0.08, 0.16]:
        print("counterexample a=%.2f d=0.2 n=2: min W = %.6f" % (a, counterexample_w(a, 0.2, 2).min()))
