"""Exact and randomized verification of factor chains, and size reports.

``verify_exact`` multiplies the whole chain and compares it entrywise with the
materialized Kronecker power.  ``verify_random`` compares ``F_0 F_1 ... x``
against ``base^{⊗n} x`` for random ``x`` over a prime field; a wrong circuit
survives one trial with probability at most ``1/p`` per wrong output row.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field as dc_field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .builder import CapExceeded, Circuit
from .sparse import SparseMatrix, equals, kron_power, matmul, sub

EXACT_CAP = 4096
PRIMES = (2**31 - 1, 2**61 - 1)
_INT64_SAFE = 2**62


class VerifyError(ValueError):
    """Raised when a circuit cannot be checked against the requested target."""


@dataclass
class VerifyReport:
    mode: str  # "exact" | "random"
    target: str
    passed: bool
    trials: int = 0
    seed: int = 0
    details: dict = dc_field(default_factory=dict)
    warning: str | None = None

    def to_json(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        line = f"{verdict} {self.mode} {self.target}"
        if self.mode == "random":
            line += f" trials={self.trials} seed={self.seed} prime={self.details.get('prime')}"
        if "first_mismatch" in self.details:
            line += f" first mismatch at {self.details['first_mismatch']}"
        return line


def _describe(base: SparseMatrix, n: int) -> str:
    return f"M^(x){n}, M {base.rows}x{base.cols} nnz={base.nnz} over {base.field.tag}"


def _common_details(c: Circuit, base: SparseMatrix, n: int) -> dict:
    size = c.size
    ln_n = n * math.log(base.rows) if base.rows > 1 and n > 0 else 0.0
    return {
        "per_layer": c.per_layer,
        "size": size,
        "depth": c.depth,
        "exponent": math.log(size) / ln_n if ln_n and size else None,
    }


def _dims_problem(c: Circuit, base: SparseMatrix, n: int) -> str | None:
    if not base.is_square():
        raise VerifyError("target base must be square")
    N = base.rows**n
    if c.dims[0] != N or c.dims[-1] != N:
        return f"circuit maps {c.dims[-1]} -> {c.dims[0]}, target is {N}x{N}"
    if c.field != base.field:
        return f"circuit field {c.field.tag} differs from target field {base.field.tag}"
    return None


# exact mode


def _to_int_csr(m: SparseMatrix) -> tuple[sp.csr_matrix | None, int]:
    """Integer CSR of ``L m`` with ``L`` the denominator lcm; ``None`` if entries overflow int64."""
    if m.field.is_prime:
        scale, vals = 1, list(m.data)
    else:
        scale = m.denominator_lcm()
        vals = [int(v * scale) for v in m.data]
    if vals and max(abs(v) for v in vals) >= _INT64_SAFE:
        return None, scale
    data = np.asarray(vals, dtype=np.int64)
    return sp.csr_matrix((data, m.indices, m.indptr), shape=m.shape), scale


def _abs_row_bound(a: sp.csr_matrix) -> int:
    if a.nnz == 0:
        return 0
    sums = np.add.reduceat(np.abs(a.data).astype(object), a.indptr[:-1][np.diff(a.indptr) > 0])
    return int(max(sums))


def _canonical(a: sp.csr_matrix, p: int | None) -> sp.csr_matrix:
    a = a.tocsr()
    if p is not None:
        a.data %= p
    a.eliminate_zeros()
    a.sum_duplicates()
    a.sort_indices()
    return a


def _flat_keys(a: sp.csr_matrix, N: int) -> np.ndarray:
    rows = np.repeat(np.arange(a.shape[0], dtype=np.int64), np.diff(a.indptr))
    return rows * N + a.indices


def _first_key_mismatch(ka: np.ndarray, kb: np.ndarray) -> int:
    return int(np.setxor1d(ka, kb, assume_unique=True).min())


def _int_exact(c: Circuit, base: SparseMatrix, n: int):
    """Exact comparison in int64; returns ``None`` when overflow cannot be ruled out."""
    f = c.field
    p = f.modulus if f.is_prime else None
    mats, scale_prod, bound = [], 1, 1
    for fac in c.factors:
        a, s = _to_int_csr(fac)
        if a is None:
            return None
        mats.append(a)
        scale_prod *= s
        bound *= max(_abs_row_bound(a), 1)
        if bound >= _INT64_SAFE:
            return None
    b, lb = _to_int_csr(base)
    if b is None or max(_abs_row_bound(b), 1) ** n >= _INT64_SAFE:
        return None
    prod = mats[-1]
    for a in reversed(mats[:-1]):
        prod = a @ prod
        if p is not None:
            prod.data %= p
    target = sp.csr_matrix(([1], ([0], [0])), shape=(1, 1), dtype=np.int64)
    for _ in range(n):
        target = sp.kron(target, b, format="csr")
    P, T = _canonical(prod, p), _canonical(target, p)
    N = base.rows**n
    # P = scale_prod * circuit, T = lb^n * target
    ts = lb**n
    # canonical CSR is row-major sorted, so the flat keys are sorted too
    kp, vp = _flat_keys(P, N), P.data
    kt, vt = _flat_keys(T, N), T.data
    if len(kp) != len(kt) or not np.array_equal(kp, kt):
        return _mismatch_at(_first_key_mismatch(kp, kt), N, c, base, n)
    if scale_prod == 1 and ts == 1:
        bad = np.nonzero(vp != vt)[0]
    else:
        bad = [i for i in range(len(vp)) if int(vp[i]) * ts != int(vt[i]) * scale_prod]
    if len(bad):
        return _mismatch_at(int(kp[bad[0]]), N, c, base, n)
    return {}


def _entry_of_chain(c: Circuit, i: int, j: int):
    """Exact ``(F_0 ... F_last)[i, j]`` by pushing one row vector through the chain."""
    f = c.field
    vec = {i: 1}
    for fac in c.factors:
        nxt: dict = {}
        for r, v in vec.items():
            for col, w in fac.row(r):
                nxt[col] = f.add(nxt.get(col, 0), f.mul(v, w))
        vec = {k: v for k, v in nxt.items() if v != 0}
    return vec.get(j, 0)


def _entry_of_power(base: SparseMatrix, n: int, i: int, j: int):
    f = base.field
    q, out = base.rows, 1
    for _ in range(n):
        out = f.mul(out, base.get(i % q, j % q))
        i //= q
        j //= q
    return out


def _mismatch_at(key: int, N: int, c: Circuit, base: SparseMatrix, n: int) -> dict:
    i, j = divmod(key, N)
    fmt = base.field.format
    return {
        "first_mismatch": [i, j],
        "expected": fmt(_entry_of_power(base, n, i, j)),
        "got": fmt(_entry_of_chain(c, i, j)),
    }


def _streaming_exact(c: Circuit, base: SparseMatrix, n: int) -> dict:
    prod = c.factors[-1]
    for fac in reversed(c.factors[:-1]):
        prod = matmul(fac, prod)
    target = kron_power(base, n)
    if equals(prod, target):
        return {}
    r, col, _ = sub(prod, target).entries[0]
    return _mismatch_at(r * base.rows**n + col, base.rows**n, c, base, n)


def verify_exact(c: Circuit, base: SparseMatrix, n: int) -> VerifyReport:
    """Multiply the chain exactly and compare with ``base^{⊗n}`` entrywise."""
    N = base.rows**n
    if N > EXACT_CAP:
        raise CapExceeded(
            f"exact verification is capped at N <= {EXACT_CAP} (got {N}); use random mode",
            {"N": N, "cap": EXACT_CAP},
        )
    details = _common_details(c, base, n)
    problem = _dims_problem(c, base, n)
    if problem:
        details["reason"] = problem
        return VerifyReport("exact", _describe(base, n), False, details=details)
    found = _int_exact(c, base, n)
    if found is None:
        details["path"] = "python"
        found = _streaming_exact(c, base, n)
    else:
        details["path"] = "int64"
    details.update(found)
    return VerifyReport("exact", _describe(base, n), not found, details=details)


# random mode


def _reduce_values(m: SparseMatrix, p: int) -> list[int] | None:
    """Entries of ``m`` reduced mod ``p``; ``None`` if a denominator vanishes mod ``p``."""
    if m.field.is_prime:
        return [int(v) % p for v in m.data]
    out = []
    for v in m.data:
        if isinstance(v, Fraction):
            if v.denominator % p == 0:
                return None
            out.append(v.numerator * pow(v.denominator, -1, p) % p)
        else:
            out.append(int(v) % p)
    return out


class _ModMatrix:
    """A sparse matrix with entries in ``[0, p)`` and an exact mod-``p`` matvec."""

    def __init__(self, m: SparseMatrix, vals: list[int], p: int):
        self.p = p
        self.shape = m.shape
        self.small = p < 2**31
        if self.small:
            self.csr = sp.csr_matrix((np.asarray(vals, dtype=np.int64), m.indices, m.indptr), shape=m.shape)
            row_nnz = int(np.diff(m.indptr).max()) if m.nnz else 0
            # a_ij * limb summed over a row must stay below 2^63
            self.limb_bits = max(1, 62 - 31 - max(1, row_nnz).bit_length())
        else:
            self.vals = np.asarray(vals, dtype=object)
            self.indices = np.asarray(m.indices)
            self.indptr = np.asarray(m.indptr)

    def apply(self, x: np.ndarray) -> np.ndarray:
        p = self.p
        if self.small:
            bits = self.limb_bits
            mask = (1 << bits) - 1
            out = np.zeros(self.shape[0], dtype=np.int64)
            shift = 0
            rest = x.copy()
            while rest.any():
                part = (self.csr @ (rest & mask)) % p
                out = (out + part * pow(2, shift, p) % p) % p if shift else (out + part) % p
                rest >>= bits
                shift += bits
            return out
        out = np.zeros(self.shape[0], dtype=object)
        if len(self.vals):
            prods = self.vals * x[self.indices]
            nonempty = np.nonzero(np.diff(self.indptr) > 0)[0]
            sums = np.add.reduceat(prods, self.indptr[nonempty])
            out[nonempty] = sums
        return out % p


def kron_power_apply_mod(base_vals: list[list[int]], n: int, x: np.ndarray, p: int) -> np.ndarray:
    """``M^{⊗n} x mod p`` one tensor axis at a time, reducing after every term."""
    q = len(base_vals)
    cur = x.reshape((q,) * n) if n else x.reshape(())
    for axis in range(n):
        moved = np.moveaxis(cur, axis, 0)
        nxt = np.zeros_like(moved)
        for s in range(q):
            acc = np.zeros_like(moved[0])
            for t in range(q):
                w = base_vals[s][t]
                if w:
                    acc = (acc + moved[t] * w % p) % p
            nxt[s] = acc
        cur = np.moveaxis(nxt, 0, axis)
    return cur.reshape(-1)


def _pick_prime(c: Circuit, base: SparseMatrix):
    if c.field.is_prime:
        p = c.field.modulus
        return p, [_reduce_values(f, p) for f in c.factors], _reduce_values(base, p)
    for p in PRIMES:
        facs = [_reduce_values(f, p) for f in c.factors]
        bv = _reduce_values(base, p)
        if bv is not None and all(v is not None for v in facs):
            return p, facs, bv
    raise VerifyError("every verification prime divides a denominator")


def verify_random(c: Circuit, base: SparseMatrix, n: int, trials: int = 20, seed: int = 0) -> VerifyReport:
    """Compare the chain against ``base^{⊗n}`` on ``trials`` random vectors mod a prime."""
    if trials < 0:
        raise ValueError("trials must be non-negative")
    details = _common_details(c, base, n)
    desc = _describe(base, n)
    problem = _dims_problem(c, base, n)
    if problem:
        details["reason"] = problem
        return VerifyReport("random", desc, False, trials, seed, details)
    p, fac_vals, bvals = _pick_prime(c, base)
    details["prime"] = p
    if trials == 0:
        msg = "no trials run; the pass is vacuous"
        warnings.warn(msg)
        return VerifyReport("random", desc, True, 0, seed, details, warning=msg)
    mods = [_ModMatrix(f, v, p) for f, v in zip(c.factors, fac_vals)]
    dense_base = [[0] * base.cols for _ in range(base.rows)]
    k = 0
    for i in range(base.rows):
        for _ in range(base.indptr[i], base.indptr[i + 1]):
            dense_base[i][int(base.indices[k])] = bvals[k]
            k += 1
    N = base.rows**n
    dtype = np.int64 if p < 2**31 else object
    for trial in range(trials):
        rng = np.random.default_rng((seed, trial))
        x = rng.integers(0, p, size=N, dtype=np.int64)
        if dtype is object:
            x = x.astype(object)
        y = x
        for m in reversed(mods):
            y = m.apply(y)
        want = kron_power_apply_mod(dense_base, n, x, p)
        diff = np.nonzero(np.asarray(y != want))[0]
        if len(diff):
            details.update({"failed_trial": trial, "first_bad_row": int(diff[0])})
            return VerifyReport("random", desc, False, trials, seed, details)
    return VerifyReport("random", desc, True, trials, seed, details)


# size reports


def _near_even(n: int, parts: int) -> list[int]:
    parts = max(1, min(parts, n))
    q, r = divmod(n, parts)
    return [q + 1] * r + [q] * (parts - r)


def size_report(c: Circuit, base: SparseMatrix | None = None, n: int | None = None) -> dict:
    """Per-layer sizes, exponents and the mixed-product size of the same target.

    Exponents are ``log_N`` of the size (raw), of ``size / depth`` and, for
    depth-2 balanced builds, of ``size / (2 e^{2G} (n+1))`` where ``n`` counts
    decomposition steps (no ``(n+1)`` for one-sided builds).
    """
    from .builder import mixed_product_size
    from .store import target_of

    per_layer = [f.nnz for f in c.factors]
    total = sum(per_layer)
    N = c.dims[0]
    lnN = math.log(N) if N > 1 else float("nan")
    out = {
        "depth": c.depth,
        "dims": c.dims,
        "per_layer": per_layer,
        "total": total,
        "N": N,
        "exponent_raw": math.log(total) / lnN,
        "exponent_per_layer": math.log(total / c.depth) / lnN,
    }
    st = c.meta.get("stats")
    steps = c.meta.get("n")
    if isinstance(st, dict) and steps and c.meta.get("method") in ("imbalanced", "one-sided"):
        slack = math.log(2) + 2 * st["G"] + (0 if st.get("one_sided") else math.log(steps + 1))
        out["exponent_slack_adjusted"] = (math.log(total) - slack) / lnN
        out["slack_log"] = slack
    if base is None:
        t = target_of(c)
        if t is not None:
            base, n = t
    if base is not None and n:
        parts = _near_even(n, c.depth)
        mp = mixed_product_size(base.nnz, base.rows, n, parts)
        out["mixed_product"] = {"depth": len(parts), "parts": parts, "total": mp, "ratio": total / mp}
    return out


def format_size_report(rep: dict) -> str:
    lines = [
        f"depth {rep['depth']}  N {rep['N']}  per-layer {rep['per_layer']}  total {rep['total']}",
        f"exponent log_N(size) = {rep['exponent_raw']:.5f}",
        f"exponent log_N(size/depth) = {rep['exponent_per_layer']:.5f}",
    ]
    if "exponent_slack_adjusted" in rep:
        lines.append(f"exponent log_N(size / 2e^(2G)(n+1)) = {rep['exponent_slack_adjusted']:.5f}")
    mp = rep.get("mixed_product")
    if mp:
        lines.append(f"mixed-product depth {mp['depth']} parts {mp['parts']}: total {mp['total']} (ratio {mp['ratio']:.4f})")
    return "\n".join(lines)
