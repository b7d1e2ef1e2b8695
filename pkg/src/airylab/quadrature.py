"""Gauss-Legendre panels."""
import functools

import numpy as np


@functools.lru_cache(maxsize=64)
def gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(int(order))
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def panel_nodes(edges, order):
    """Nodes and weights of composite GL on consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    return (a + half * (x + 1.0)).ravel(), (half * w).ravel()


def graded_edges(length, h0, ratio=1.5, hmax=None):
    """Panel edges on [0, length]: first panel h0, then geometric growth capped at hmax."""
    if length <= 0:
        return np.array([0.0])
    h0 = min(h0, length)
    hmax = length if hmax is None else hmax
    edges = [0.0]
    h = h0
    while edges[-1] + h < length * (1 - 1e-12):
        edges.append(edges[-1] + h)
        h = min(h * ratio, hmax)
    edges.append(length)
    if len(edges) > 2 and edges[-1] - edges[-2] < 0.25 * (edges[-2] - edges[-3]):
        del edges[-2]
    return np.array(edges)


def refine(edges):
    """Split every panel in two."""
    edges = np.asarray(edges, dtype=float)
    mid = 0.5 * (edges[:-1] + edges[1:])
    out = np.empty(2 * len(edges) - 1)
    out[0::2] = edges
    out[1::2] = mid
    return out
