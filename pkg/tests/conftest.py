import numpy as np
import pytest

from industryspace import RelatednessNetwork


def random_network(rng, n, density=0.6, dyadic=False):
    """Random symmetric weighted graph with every node attached somewhere.

    With ``dyadic=True`` weights are multiples of 2**-10, so any summation
    order gives bit-identical sums (handy for exact-equality oracles).
    """
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                if dyadic:
                    w[i, j] = rng.integers(1, 1024) / 1024.0
                else:
                    w[i, j] = rng.uniform(1e-3, 0.999)
    # attach isolated nodes so every degree is positive
    for i in range(n):
        if w[i].sum() == 0 and w[:, i].sum() == 0:
            j = (i + 1) % n
            value = (rng.integers(1, 1024) / 1024.0) if dyadic else rng.uniform(0.1, 0.9)
            w[min(i, j), max(i, j)] = value
    w = np.triu(w, 1)
    w = w + w.T
    codes = tuple(f"{1000 + k}" for k in range(n))
    return RelatednessNetwork(codes=codes, weights=w)


def sc_path_oracle(net, mask):
    """Exhaustive 2-step path enumeration for the cohesion random walk."""
    d = net.degrees
    starts = [i for i in np.nonzero(mask)[0] if d[i] > 0]
    out = np.zeros(net.n)
    if not starts:
        return out
    p0 = 1.0 / len(starts)
    for s in starts:
        for m in range(net.n):
            if net.weights[s, m] <= 0:
                continue
            for i in range(net.n):
                if net.weights[m, i] <= 0:
                    continue
                out[i] += p0 * (net.weights[s, m] / d[s]) * (net.weights[m, i] / d[m])
    return out


def wc_loop_oracle(net, mask):
    """Naive double-loop weighted-closeness sum."""
    x = mask.astype(float)
    out = np.zeros(net.n)
    for i in range(net.n):
        acc = 0.0
        for j in range(net.n):
            if j != i:
                acc += net.weights[i, j] * x[j]
        out[i] = acc
    return out


@pytest.fixture
def two_candidate_network():
    """Toy graph: two candidates with equal direct linkage to the region.

    Candidate A's four present neighbours have no other edges; candidate
    B's four present neighbours are chained together and reach a fifth
    present industry, so only B is reachable by a two-step walk.
    """
    codes = ("A", "B", "N1", "N2", "N3", "N4", "M1", "M2", "M3", "M4", "C")
    idx = {c: k for k, c in enumerate(codes)}
    w = np.zeros((len(codes), len(codes)))
    edges = [
        ("A", "N1"), ("A", "N2"), ("A", "N3"), ("A", "N4"),
        ("B", "M1"), ("B", "M2"), ("B", "M3"), ("B", "M4"),
        ("M1", "M2"), ("M2", "M3"), ("M3", "M4"), ("M1", "C"),
    ]
    for a, b in edges:
        i, j = sorted((idx[a], idx[b]))
        w[i, j] = 0.5
    w = w + w.T
    net = RelatednessNetwork(codes=codes, weights=w)
    present = {c: 1 for c in ("N1", "N2", "N3", "N4", "M1", "M2", "M3", "M4", "C")}
    return net, present
