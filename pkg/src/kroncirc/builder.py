"""Circuit synthesis for Kronecker powers.

``build_depth2`` runs the soft/hard balancing recursion.  Every term of the
recursion is a pair ``(A, B)`` with ``A = C_1 ⊗ ... ⊗ C_n`` and ``B = D_1 ⊗
... ⊗ D_n``; each step either applies a decomposition pair (soft, forward
``(U_j, V_j)`` or reversed with the dual pair) or the hard balancer
``(L, R)`` / ``(R, L)``.  Terms leave the soft set ``F`` once
``|ln(nnz A / nnz B)| >= Gamma_k`` and are hard balanced from then on.

All threshold comparisons are exact: ``exp(Gamma_k) = hard_ratio^(n-k) *
G_ratio^2`` is a rational number, and sparsities are integers.

The recursion is planned on sparsities alone and matrices are materialized
only once the plan fits the caps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import CapExceeded
from .decomp import Decomposition, DecompositionError, hard_pair_ok, ratio, stats
from .field import Field
from .sparse import SparseMatrix, _normalizer, kron_all, kron_power


class BuildRefused(DecompositionError):
    """The decomposition does not qualify for the requested construction."""


@dataclass(frozen=True)
class BuildCaps:
    max_terms: int = 2**22
    max_nnz: int = 2**28


@dataclass(frozen=True)
class Step:
    kind: str  # "soft" | "hard"
    side: str  # "forward" | "reversed"
    index: int | None = None  # pair index (0-based) for soft steps


@dataclass(frozen=True)
class TermLabel:
    steps: tuple = ()

    def __post_init__(self):
        seen_hard = False
        for s in self.steps:
            if s.kind == "hard":
                seen_hard = True
            elif seen_hard:
                raise ValueError("soft step after a hard step")

    def __len__(self) -> int:
        return len(self.steps)


# step codes used internally: soft forward j -> 2j, soft reversed j -> 2j+1,
# hard forward -> -1, hard reversed -> -2
def _code_to_step(code: int) -> Step:
    if code == -1:
        return Step("hard", "forward")
    if code == -2:
        return Step("hard", "reversed")
    return Step("soft", "reversed" if code & 1 else "forward", code >> 1)


def _step_to_code(step: Step) -> int:
    if step.kind == "hard":
        return -1 if step.side == "forward" else -2
    return 2 * step.index + (1 if step.side == "reversed" else 0)


@dataclass
class Circuit:
    """A chain of sparse factors; ``factors[0]`` is on the output side."""

    factors: list
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        for a, b in zip(self.factors, self.factors[1:]):
            if a.cols != b.rows:
                raise ValueError(f"factor chain breaks: {a.shape} then {b.shape}")

    @property
    def depth(self) -> int:
        return len(self.factors)

    @property
    def per_layer(self) -> list[int]:
        return [f.nnz for f in self.factors]

    @property
    def size(self) -> int:
        return sum(self.per_layer)

    @property
    def dims(self) -> list[int]:
        return [self.factors[0].rows] + [f.cols for f in self.factors]

    @property
    def field(self) -> Field:
        return self.factors[0].field


@dataclass(frozen=True)
class Term:
    codes: tuple
    nnz_a: int
    nnz_b: int
    width: int
    exit_step: int | None  # None for terms that stayed soft through step n

    @property
    def label(self) -> TermLabel:
        return TermLabel(tuple(_code_to_step(c) for c in self.codes))


@dataclass
class Plan:
    decomposition: Decomposition
    n: int
    terms: list
    stats: object
    G_ratio: Fraction
    hard_ratio: Fraction

    @property
    def per_layer(self) -> tuple[int, int]:
        return (sum(t.nnz_a for t in self.terms), sum(t.nnz_b for t in self.terms))

    @property
    def size(self) -> int:
        return sum(self.per_layer)

    def max_terminal_ratio(self) -> Fraction:
        return max(ratio(t.nnz_a, t.nnz_b) for t in self.terms)


def _prepare(d: Decomposition, *, require_guarantee: bool = True):
    od, _ = d.oriented()
    st = stats(d)
    if require_guarantee and not (st.imbalanced or st.one_sided):
        raise BuildRefused(
            "decomposition is neither imbalanced nor one-sided; the size guarantee does not apply "
            "(use the mixed-product method instead)"
        )
    dual = od.dual()
    if len(dual) != od.J:
        raise DecompositionError("dual pairs must match the pairs one-to-one")
    if not hard_pair_ok(od):
        raise DecompositionError("hard pair must satisfy L R = R L = base")
    return od, dual, st


def plan_depth2(d: Decomposition, n: int, caps: BuildCaps = BuildCaps(), *, require_guarantee: bool = True) -> Plan:
    """Run the recursion on sparsities only and return the ordered terms."""
    if n < 1:
        raise ValueError("n must be positive")
    od, dual, st = _prepare(d, require_guarantee=require_guarantee)
    fwd = [(p.u.nnz, p.v.nnz, p.u.cols) for p in od.pairs]
    rev = [(p.u.nnz, p.v.nnz, p.u.cols) for p in dual]
    left, right = od.hard()
    hl, hr, q = left.nnz, right.nnz, od.q
    hard_ratio = ratio(hl, hr)
    G2 = st.G_ratio**2
    thresh = [hard_ratio ** (n - k) * G2 for k in range(n + 1)]

    f_terms: list[Term] = []
    g_terms: list[Term] = []
    total_nnz = 0

    def cap_check():
        count = len(f_terms) + len(g_terms)
        if count > caps.max_terms or total_nnz > caps.max_nnz:
            raise CapExceeded(
                f"cap exceeded at {count} terms / {total_nnz} nnz",
                {"terms": count, "nnz": total_nnz, "F": len(f_terms), "G": len(g_terms), "n": n},
            )

    def hard_tail(codes, a, b, width, k):
        for _ in range(k, n):
            if a >= b:
                codes, a, b = codes + (-1,), a * hl, b * hr
            else:
                codes, a, b = codes + (-2,), a * hr, b * hl
            width *= q
        return codes, a, b, width

    # explicit DFS stack keeps terms in lexicographic label order
    stack = [((), 1, 1, 1)]
    while stack:
        codes, a, b, width = stack.pop()
        k = len(codes) + 1
        children = []
        forward = a >= b
        for j in range(od.J):
            u, v, r = fwd[j] if forward else rev[j]
            na, nb, nw = a * u, b * v, width * r
            code = codes + (2 * j + (0 if forward else 1),)
            if ratio(na, nb) < thresh[k]:
                if k == n:
                    f_terms.append(Term(code, na, nb, nw, None))
                    total_nnz += na + nb
                else:
                    children.append((code, na, nb, nw))
            else:
                tc, ta, tb, tw = hard_tail(code, na, nb, nw, k)
                g_terms.append(Term(tc, ta, tb, tw, k))
                total_nnz += ta + tb
        cap_check()
        stack.extend(reversed(children))
    # f_terms come out in DFS order except for leaves interleaved with deeper
    # branches; sort by code tuple to get the exact lexicographic order
    f_terms.sort(key=lambda t: t.codes)
    g_terms.sort(key=lambda t: (t.exit_step, t.codes))
    return Plan(od, n, f_terms + g_terms, st, st.G_ratio, hard_ratio)


def _step_matrices(od: Decomposition, dual, code: int):
    if code == -1:
        left, right = od.hard()
        return left, right
    if code == -2:
        left, right = od.hard()
        return right, left
    p = dual[code >> 1] if code & 1 else od.pairs[code >> 1]
    return p.u, p.v


def expand_term(label: TermLabel, d: Decomposition) -> tuple[SparseMatrix, SparseMatrix]:
    """Materialize ``(A, B)`` for a label of the (oriented) decomposition ``d``."""
    od, _ = d.oriented()
    dual = od.dual()
    if not label.steps:
        one = SparseMatrix.identity(1, d.field)
        return one, one
    mats = []
    for s in label.steps:
        if s.kind == "soft" and not 0 <= s.index < od.J:
            raise IndexError(f"pair index {s.index} out of range")
        mats.append(_step_matrices(od, dual, _step_to_code(s)))
    return kron_all([m[0] for m in mats]), kron_all([m[1] for m in mats])


class _Coo:
    __slots__ = ("rows", "cols", "r", "c", "v")

    def __init__(self, rows, cols, r, c, v):
        self.rows, self.cols, self.r, self.c, self.v = rows, cols, r, c, v

    @classmethod
    def of(cls, m: SparseMatrix) -> "_Coo":
        return cls(m.rows, m.cols, m.row_indices(), m.indices, list(m.data))

    def kron(self, m: "_Coo", norm) -> "_Coo":
        r = (self.r[None, :] + self.rows * m.r[:, None]).ravel()
        c = (self.c[None, :] + self.cols * m.c[:, None]).ravel()
        sv = self.v
        v = [norm(y * x) for y in m.v for x in sv]
        return _Coo(self.rows * m.rows, self.cols * m.cols, r, c, v)


def materialize(plan: Plan) -> Circuit:
    od = plan.decomposition
    dual = od.dual()
    norm = _normalizer(od.field)
    step_coo: dict[int, tuple[_Coo, _Coo]] = {}

    def coo_for(code):
        if code not in step_coo:
            a, b = _step_matrices(od, dual, code)
            step_coo[code] = (_Coo.of(a), _Coo.of(b))
        return step_coo[code]

    one = _Coo(1, 1, np.zeros(1, np.int64), np.zeros(1, np.int64), [1])
    N = od.q**plan.n
    # column offsets of A blocks / row offsets of B blocks in final order
    offsets = np.concatenate([[0], np.cumsum([t.width for t in plan.terms])]).astype(np.int64)
    H = int(offsets[-1])
    a_r, a_c, a_v, b_r, b_c, b_v = [], [], [], [], [], []

    # visit in lexicographic code order to share prefixes
    order = sorted(range(len(plan.terms)), key=lambda i: plan.terms[i].codes)
    cache: list[tuple[int, _Coo, _Coo]] = []  # (code, A prefix, B prefix)
    for idx in order:
        t = plan.terms[idx]
        keep = 0
        while keep < len(cache) and keep < len(t.codes) and cache[keep][0] == t.codes[keep]:
            keep += 1
        del cache[keep:]
        for code in t.codes[keep:]:
            pa, pb = (cache[-1][1], cache[-1][2]) if cache else (one, one)
            sa, sb = coo_for(code)
            cache.append((code, pa.kron(sa, norm), pb.kron(sb, norm)))
        A, B = cache[-1][1], cache[-1][2]
        off = offsets[idx]
        a_r.append(A.r)
        a_c.append(A.c + off)
        a_v.extend(A.v)
        b_r.append(B.r + off)
        b_c.append(B.c)
        b_v.extend(B.v)
    f = od.field
    fa = SparseMatrix.from_coo(N, H, np.concatenate(a_r), np.concatenate(a_c), a_v, f, trusted=True)
    fb = SparseMatrix.from_coo(H, N, np.concatenate(b_r), np.concatenate(b_c), b_v, f, trusted=True)
    return Circuit([fa, fb])


def size_bound(plan: Plan) -> mpmath.mpf:
    """``2 e^{2G} (n+1) e^{alpha1 n}``, without the ``(n+1)`` for one-sided inputs."""
    st = plan.stats
    with mpmath.workprec(120):
        s = mpmath.fsum(mpmath.sqrt(mpmath.mpf(p.u.nnz) * p.v.nnz) for p in plan.decomposition.pairs)
        g2 = mpmath.mpf(st.G_ratio.numerator**2) / st.G_ratio.denominator**2
        bound = 2 * g2 * s**plan.n
        if not st.one_sided:
            bound *= plan.n + 1
        return bound


def build_depth2(d: Decomposition, n: int, caps: BuildCaps = BuildCaps(), *, require_guarantee: bool = True) -> Circuit:
    plan = plan_depth2(d, n, caps, require_guarantee=require_guarantee)
    circ = materialize(plan)
    st = plan.stats
    unit, upow = d.unit_matrix()
    n_f = sum(1 for t in plan.terms if t.exit_step is None)
    circ.meta.update(
        {
            "method": "one-sided" if st.one_sided else "imbalanced",
            "source": d.source,
            "n": n,
            "terms": len(plan.terms),
            "terms_soft": n_f,
            "terms_hard": len(plan.terms) - n_f,
            "stats": st.to_json(),
            "size_bound": float(size_bound(plan)),
            "max_terminal_log_ratio": math.log(plan.max_terminal_ratio()),
            "target_unit": unit,
            "target_power": upow * n,
        }
    )
    return circ


# baselines and boosting


def _identity(n: int, field: Field) -> SparseMatrix:
    return SparseMatrix.identity(n, field)


def build_mixed_product(m: SparseMatrix, n: int, dpth: int, parts: Sequence[int] | None = None) -> Circuit:
    """Factor ``m^{⊗n}`` into ``dpth`` layers, each applying ``m^{⊗n_i}`` to one digit block.

    ``parts`` overrides the even split ``n / dpth``.
    """
    if parts is None:
        if dpth < 1 or n % dpth:
            raise ValueError(f"depth {dpth} does not divide n={n}")
        parts = [n // dpth] * dpth
    parts = list(parts)
    if len(parts) != dpth or sum(parts) != n or min(parts) < 1:
        raise ValueError("parts must be dpth positive integers summing to n")
    q, f = m.rows, m.field
    factors, before = [], 0
    for p in parts:
        after = n - before - p
        mats = [_identity(q**before, f), kron_power(m, p), _identity(q**after, f)]
        factors.append(kron_all(mats))
        before += p
    return Circuit(
        factors,
        {"method": "mixed-product", "n": n, "parts": parts, "target_unit": m, "target_power": n},
    )


def mixed_product_size(nnz_m: int, q: int, n: int, parts: Sequence[int]) -> int:
    """Size of the mixed-product circuit by formula (no materialization)."""
    return sum(nnz_m**p * q ** (n - p) for p in parts)


def lift_block_circuit(block: Circuit, copies: int) -> Circuit:
    """Circuit for ``B^{⊗copies}`` from a circuit for ``B``: one block slot at a time."""
    NB = block.factors[0].rows
    f = block.field
    factors = []
    for s in range(copies):
        lo, hi = _identity(NB**s, f), _identity(NB ** (copies - 1 - s), f)
        factors.extend(kron_all([lo, fac, hi]) for fac in block.factors)
    return Circuit(factors, {"method": "lifted", "copies": copies, "block_per_layer": block.per_layer})


def _restrict_block(block: Circuit, NB: int, scale) -> Circuit:
    """Keep the leading ``NB x NB`` corner of a depth-2 block and drop dead wires."""
    P, Qm = block.factors
    keep_rows = list(range(NB))
    P = P.submatrix(keep_rows, range(P.cols))
    Qm = Qm.submatrix(range(Qm.rows), keep_rows).scale(scale)
    live = sorted(set(np.unique(P.indices).tolist()) & set(np.unique(Qm.row_indices()).tolist()))
    P = P.submatrix(keep_rows, live)
    Qm = Qm.submatrix(live, keep_rows)
    return Circuit([P, Qm])


def boost_depth(
    d: Decomposition,
    n: int,
    dpth: int,
    caps: BuildCaps = BuildCaps(),
    block: Circuit | None = None,
) -> Circuit:
    """Depth-``dpth`` circuit for ``unit^{⊗n}`` from depth-2 block circuits.

    ``n`` counts powers of the decomposition's unit matrix (``d.unit``, or the
    base itself).  Each of the ``dpth/2`` blocks is ``unit^{⊗(2n/dpth)}``; when
    that exponent is not a multiple of the base's power the block is cut out
    of the next larger power and rescaled by ``unit[0,0]^{-excess}``.
    """
    if dpth < 2 or dpth % 2:
        raise ValueError("boost depth must be an even integer >= 2")
    copies = dpth // 2
    if (2 * n) % dpth:
        raise ValueError(f"depth/2={copies} does not divide n={n}")
    b = n // copies
    unit, upow = d.unit_matrix()
    if block is None:
        m_blocks = -(-b // upow)
        block = build_depth2(d, m_blocks, caps)
        excess = m_blocks * upow - b
        if excess:
            a00 = unit.get(0, 0)
            if a00 == 0:
                raise BuildRefused("padding needs unit[0,0] != 0")
            scale = unit.field.power(a00, -excess)
            block = _restrict_block(block, unit.rows**b, scale)
    elif block.factors[0].rows != unit.rows**b:
        raise ValueError("block circuit has the wrong dimension")
    out = lift_block_circuit(block, copies)
    out.meta.update(
        {"method": "boost", "depth": dpth, "n": n, "block_units": b, "target_unit": unit, "target_power": n}
    )
    return out


# expectation oracle


def process_expectation(d: Decomposition, n: int, max_paths: int = 10**6):
    """Exact ``E[exp(S_n)]`` of the two-stage random walk, by enumerating all paths.

    Returns ``(layer1, layer2, info)`` with rational layer expectations and
    ``info = {"stage2_paths": int, "max_stage1_log_ratio": float}``.
    """
    od, _ = d.oriented()
    st = stats(d)
    dual = od.dual()
    J = od.J
    if J**n > max_paths:
        raise CapExceeded(f"J^n = {J}^{n} paths exceeds {max_paths}", {"J": J, "n": n})
    X = [(J * p.u.nnz, J * p.v.nnz) for p in od.pairs]
    Xd = [(J * p.u.nnz, J * p.v.nnz) for p in dual]
    left, right = od.hard()
    Y, Yd = (left.nnz, right.nnz), (right.nnz, left.nnz)
    g = st.G_ratio
    step_ratio = Fraction(left.nnz, right.nnz) if left.nnz >= right.nnz else Fraction(right.nnz, left.nnz)

    def exceeds(sa, sb, k):
        # |T_k| >= Gamma_k  <=>  max(sa/sb, sb/sa) >= step_ratio^(n-k) * g^2
        big, small = (sa, sb) if sa >= sb else (sb, sa)
        return Fraction(big, small) >= step_ratio ** (n - k) * g * g

    total_a = total_b = Fraction(0)
    stage2 = 0
    worst = Fraction(1)
    frontier = [(1, 1, Fraction(1))]
    for k in range(1, n + 1):
        nxt = []
        for sa, sb, w in frontier:
            choices = X if sa >= sb else Xd
            for xa, xb in choices:
                na, nb, nw = sa * xa, sb * xb, w / J
                if exceeds(na, nb, k):
                    stage2 += 1
                    for _ in range(k, n):
                        ya, yb = Y if na >= nb else Yd
                        na, nb = na * ya, nb * yb
                    total_a += nw * na
                    total_b += nw * nb
                else:
                    worst = max(worst, Fraction(max(na, nb), min(na, nb)))
                    nxt.append((na, nb, nw))
        frontier = nxt
    for sa, sb, w in frontier:
        total_a += w * sa
        total_b += w * sb
    info = {"stage2_paths": stage2, "max_stage1_log_ratio": math.log(worst)}
    return total_a, total_b, info
