"""Closed-form circuit exponents.

A depth-2 circuit of size ``O(N^c)`` for ``N x N`` matrices is summarized by
``c``.  Rank-``r`` rigidity ``R`` of a ``q x q`` base gives size
``(q r + sqrt(q R))^n`` through the one-sided construction, i.e.
``c = log(q r + sqrt(q R)) / log q``.
"""

from __future__ import annotations

import math
from math import comb

from .rigidity import change_bound

LN2 = math.log(2)


def rigidity_exponent(q: int, r: int, changes: int) -> float:
    return math.log(q * r + math.sqrt(q * changes)) / math.log(q)


def c_kron2(k: int) -> float:
    """Exponent from the generic rank-1 bound on ``M^{⊗k}``, ``M`` any 2x2 matrix."""
    if k < 1:
        raise ValueError("k must be positive")
    N = 2**k
    if k % 2 == 0:
        inner = N - comb(k + 1, k // 2)
    else:
        inner = N - comb(k + 2, (k + 1) // 2) / 2
    return math.log(N + N * math.sqrt(inner)) / math.log(N)


def c_wh(k: int) -> float:
    """Exponent from the Walsh-Hadamard rank-1 bound on ``H_k``."""
    if k < 1:
        raise ValueError("k must be positive")
    N = 2**k
    if k % 2 == 0:
        inner = 2 ** (k - 1) - 2 ** ((k - 2) / 2)
    else:
        inner = 2 ** (k - 1) - 2 ** ((k - 3) / 2)
    return math.log(N + N * math.sqrt(inner)) / math.log(N)


def prior_c(r: int, changes: int, N: int) -> float:
    """``c = log_N((r + 1)(r + R / N))`` of the concatenated ``[U | I] x [V ; S]`` split."""
    return math.log((r + 1) * (r + changes / N)) / math.log(N)


def prior_exponent(r: int, changes: int, N: int) -> float:
    """Depth-2 size exponent ``1 + c/2`` of the prior rigidity-based construction."""
    return 1 + prior_c(r, changes, N) / 2


def hadamard_rank1_lower(n: int) -> int:
    """Known lower bounds on the rank-1 rigidity of ``H_n`` used for the prior-method minimum.

    ``432 * 4^(n-5)`` for ``n >= 5`` (brute-force value at ``n = 5``, then
    ``R_{H_n} >= 4 R_{H_{n-1}}``); ``N^2 / 4`` below that.
    """
    if n >= 5:
        return 432 * 4 ** (n - 5)
    return 4**n // 4


def prior_min(n_range=range(5, 9)) -> tuple[float, int]:
    """Smallest prior-method ``c`` over ``n_range`` using the rank-1 lower bounds."""
    best = min((prior_c(1, hadamard_rank1_lower(n), 2**n), n) for n in n_range)
    return best


def js_exponent() -> float:
    return math.log2(1 + math.sqrt(2))


def js_recurrence_exponent(s: int, r: int, n: int) -> float:
    return math.log(2 * s + 3 * r) / (n * LN2)


def partition_exponent(alpha1: float, bits: int) -> float:
    """``alpha1 / (bits ln 2)`` for a decomposition of a ``2^bits x 2^bits`` base."""
    return alpha1 / (bits * LN2)


def h_general(s: float, q: int) -> float:
    """``h(s, q) = (1 / (4 q^2 log q)) (s/128)^2 / log^2(2/s)``, logs base 2."""
    if not 0 < s < 1 or q < 2:
        raise ValueError("need 0 < s < 1 and q >= 2")
    return (1 / (4 * q * q * math.log2(q))) * (s / 128) ** 2 / math.log2(2 / s) ** 2


def b_general(s: float, q: int) -> float:
    return max(1 + s, 1.5 - h_general(s, q) / 2)


def a_general(s: float, q: int) -> float:
    return 1.5 - b_general(s, q)


def exponent_calc(family: str, **params) -> dict:
    """Dispatch on ``family`` in {kron2, wh, prior, general-q, js}."""
    if family == "kron2":
        k = int(params["k"])
        return {"family": family, "k": k, "changes": change_bound(k), "c": c_kron2(k)}
    if family == "wh":
        k = int(params["k"])
        return {"family": family, "k": k, "changes": change_bound(k, "wh"), "c": c_wh(k)}
    if family == "prior":
        k = int(params.get("k", 4))
        r = int(params.get("r", 1))
        changes = params.get("changes")
        changes = int(changes) if changes is not None else change_bound(k, "wh")
        N = 2**k
        c = prior_c(r, changes, N)
        cmin, nmin = prior_min()
        return {
            "family": family,
            "k": k,
            "r": r,
            "changes": changes,
            "c": c,
            "exponent": 1 + c / 2,
            "min_c_n5_to_8": cmin,
            "argmin_n": nmin,
        }
    if family == "general-q":
        q = int(params.get("q", 2))
        s = float(params.get("s", 0.4))
        h = h_general(s, q)
        return {"family": family, "q": q, "s": s, "h": h, "b": b_general(s, q), "a": a_general(s, q)}
    if family == "js":
        return {"family": family, "c": js_exponent()}
    raise ValueError(f"unknown exponent family {family!r}")
