"""Lift metrics on tangent and cotangent bundles.

Four lifted metrics of a base metric g on an m-dimensional chart are
supported, each in two presentations:

* ``lift_blocks_at``: 2x2 block matrices (metric, inverse, and the two
  families of Christoffel matrices, indexed by base and fiber output
  directions) in the frame in which those blocks take their standard
  closed form.  For the Sasaki lift on TM, the horizontal lift on TM and
  the Sasaki lift on T*M that frame is the adapted frame
  ``{delta_i, d/dfiber^i}`` built from the base connection; for the
  complete lift it is the induced coordinate frame itself.
* ``lift_to_chart``: an honest :class:`ChartedMetric` on the induced
  2m-dimensional chart (x, fiber), assembled symbolically from the
  component trees, their derivatives and the cofactor inverse, with no
  simplification beyond 0/1 folding.  The result feeds the wholly
  generic pipeline and serves as an independent oracle for the block
  formulas.

Conventions.  On TM the fiber coordinates are vector components u^i and
the adapted frame is ``delta_i = d_i - u^h Gamma^k_{hi} d/du^k`` (sum
over the fiber index k).  On T*M the fiber coordinates are covector
components p_i and ``delta_i = d_i + p_a Gamma^a_{ki} d/dp_k``.  The
complete and horizontal lift metrics coincide as metrics (their
coordinate matrices agree by metric compatibility); they are kept as
separate kinds because their block presentations, frames and standard
harmonicity conditions differ.

The lifted-identity-map harmonicity conditions are trace conditions on
block differences.  ``lifted_tension_at`` evaluates them exactly as the
standard block computation states them, including the convention that
the horizontal-lift condition is contracted against the Sasaki-type
inverse; contracting against the horizontal metric's own inverse yields
exactly twice the same quantity (both vanish together), and is available
via ``horizontal_contraction="own-inverse"``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

import numpy as np

from . import exprlang as ex
from .exprlang import ExprAst
from .metric import (
    ChartedMetric,
    _checked_inverse,
    christoffel_and_derivative_at,
    metric_jets_at,
    mirror_components,
)

__all__ = [
    "LiftKind",
    "FiberPoint",
    "LiftBlocks",
    "LiftedTension",
    "FrameChange",
    "lift_blocks_at",
    "lifted_tension_at",
    "lift_to_chart",
    "adapted_frame_at",
    "connection_in_frame",
    "components_in_adapted_frame",
    "fiber_lattice",
    "check_lift_conditions",
]

MAX_LIFT_TREE_SIZE = 2_000_000


class LiftKind(enum.Enum):
    SASAKI_TM = "sasaki-tm"
    HORIZONTAL_TM = "horizontal-tm"
    COMPLETE_TM = "complete-tm"
    SASAKI_CTM = "sasaki-ctm"

    @property
    def cotangent(self) -> bool:
        return self is LiftKind.SASAKI_CTM

    @property
    def frame(self) -> str:
        return "induced" if self is LiftKind.COMPLETE_TM else "adapted"


@dataclass(frozen=True)
class FiberPoint:
    """Point of the bundle chart: base coordinates plus fiber components
    (vector components u for TM kinds, covector components p for T*M)."""

    base: np.ndarray
    fiber: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "fiber", np.asarray(self.fiber, dtype=float))
        if self.base.shape != self.fiber.shape or self.base.ndim != 1:
            raise ValueError("base and fiber must be equal-length vectors")

    def chart_point(self) -> np.ndarray:
        return np.concatenate([self.base, self.fiber])


@dataclass(frozen=True)
class LiftedTension:
    """Trace residuals of the lifted identity map, split by output
    direction family (base directions / fiber directions)."""

    base: np.ndarray
    fiber: np.ndarray


@dataclass(frozen=True)
class LiftBlocks:
    kind: LiftKind
    frame: str
    metric: np.ndarray  # (2m, 2m)
    inverse: np.ndarray  # (2m, 2m)
    gamma_base: np.ndarray  # (m, 2m, 2m), output along base directions
    gamma_fiber: np.ndarray  # (m, 2m, 2m), output along fiber directions

    @property
    def dim(self) -> int:
        return self.gamma_base.shape[0]


def _block(mm: np.ndarray, ul, ur, ll, lr) -> np.ndarray:
    m = mm
    out = np.zeros((2 * m, 2 * m))
    if ul is not None:
        out[:m, :m] = ul
    if ur is not None:
        out[:m, m:] = ur
    if ll is not None:
        out[m:, :m] = ll
    if lr is not None:
        out[m:, m:] = lr
    return out


def _base_fields(g: ChartedMetric, x, order: int = 2):
    G, dG, d2G = metric_jets_at(g, x, order=order)
    ginv = _checked_inverse(G, x)
    return G, dG, d2G, ginv


def _riemann(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    P = np.einsum("kjhi->kijh", dgamma)
    Q = np.einsum("kil,ljh->kijh", gamma, gamma)
    return (P - np.swapaxes(P, 1, 2)) + (Q - np.swapaxes(Q, 1, 2))


def lift_blocks_at(g: ChartedMetric, kind: LiftKind, q: FiberPoint) -> LiftBlocks:
    """Metric, inverse and Christoffel blocks of the lifted metric at a
    bundle point, in the frame reported by ``kind.frame``."""
    m = g.dim
    if q.base.shape[0] != m:
        raise ValueError("fiber point dimension does not match the chart")
    x, w = q.base, q.fiber
    G, dG, _, ginv = _base_fields(g, x, order=2)
    gamma, dgamma = christoffel_and_derivative_at(g, x)
    zeros = np.zeros((m, m))

    if kind is LiftKind.SASAKI_TM:
        riem = _riemann(gamma, dgamma)
        metric = _block(m, G, zeros, zeros, G)
        inverse = _block(m, ginv, zeros, zeros, ginv)
        # (1,2) entry (i,j): (1/2) R^k_{hji} u^h ; (2,1) its transpose
        b12 = 0.5 * np.einsum("h,khji->kij", w, riem)
        gb = np.stack(
            [_block(m, gamma[k], b12[k], b12[k].T, zeros) for k in range(m)]
        )
        f11 = -0.5 * np.einsum("h,kijh->kij", w, riem)
        gf = np.stack(
            [_block(m, f11[k], gamma[k], gamma[k], zeros) for k in range(m)]
        )
        return LiftBlocks(kind, "adapted", metric, inverse, gb, gf)

    if kind is LiftKind.HORIZONTAL_TM:
        metric = _block(m, zeros, G, G, zeros)
        inverse = _block(m, zeros, ginv, ginv, zeros)
        gb = np.stack(
            [_block(m, gamma[k], gamma[k], gamma[k], zeros) for k in range(m)]
        )
        gf = np.zeros((m, 2 * m, 2 * m))
        return LiftBlocks(kind, "adapted", metric, inverse, gb, gf)

    if kind is LiftKind.COMPLETE_TM:
        ul = np.einsum("h,ijh->ij", w, dG)
        metric = _block(m, ul, G, G, zeros)
        lr = -ginv @ ul @ ginv  # u^h d_h g^{ij}
        inverse = _block(m, zeros, ginv, ginv, lr)
        gb = np.stack([_block(m, gamma[k], zeros, zeros, zeros) for k in range(m)])
        f11 = np.einsum("h,kijh->kij", w, dgamma)
        gf = np.stack(
            [_block(m, f11[k], gamma[k], gamma[k], zeros) for k in range(m)]
        )
        return LiftBlocks(kind, "induced", metric, inverse, gb, gf)

    if kind is LiftKind.SASAKI_CTM:
        riem = _riemann(gamma, dgamma)
        metric = _block(m, G, zeros, zeros, ginv)
        inverse = _block(m, ginv, zeros, zeros, G)
        # (1,2) entry (i,j): (1/2) p_n g^{kt} g^{js} R^n_{tis}
        b12 = 0.5 * np.einsum("n,kt,js,ntis->kij", w, ginv, ginv, riem)
        gb = np.stack(
            [_block(m, gamma[k], b12[k], b12[k].T, zeros) for k in range(m)]
        )
        # fiber family: [[ (1/2) p_n R^n_{ijk}, -Gamma^j_{ik}], [-Gamma^i_{jk}, 0]]
        f11 = 0.5 * np.einsum("n,nijk->kij", w, riem)
        f12 = -np.einsum("jik->kij", gamma)
        gf = np.stack(
            [_block(m, f11[k], f12[k], f12[k].T, zeros) for k in range(m)]
        )
        return LiftBlocks(kind, "adapted", metric, inverse, gb, gf)

    raise ValueError(f"unknown lift kind: {kind!r}")


def lifted_tension_at(
    g: ChartedMetric,
    ghat: ChartedMetric,
    kind: LiftKind,
    q: FiberPoint,
    horizontal_contraction: str = "sasaki-inverse",
) -> LiftedTension:
    """Trace residuals tr(inv . (hat-blocks - blocks)) of the lifted
    identity map, per output family.

    Both metrics' blocks are formed at the same bundle point; the
    contraction uses the lift of ``g``.  For the horizontal kind the
    standard condition contracts against the Sasaki-type inverse
    diag(g^-1, g^-1); ``horizontal_contraction="own-inverse"`` contracts
    against the horizontal metric's own inverse instead, which doubles
    the value and has the same zero set.
    """
    if g.coords != ghat.coords:
        raise ValueError("lifted pair must share the chart")
    blocks = lift_blocks_at(g, kind, q)
    blocks_hat = lift_blocks_at(ghat, kind, q)
    m = g.dim
    if kind is LiftKind.HORIZONTAL_TM:
        if horizontal_contraction == "sasaki-inverse":
            ginv = blocks.inverse[:m, m:]
            contract = _block(m, ginv, np.zeros((m, m)), np.zeros((m, m)), ginv)
        elif horizontal_contraction == "own-inverse":
            contract = blocks.inverse
        else:
            raise ValueError(
                "horizontal_contraction must be 'sasaki-inverse' or 'own-inverse'"
            )
    else:
        contract = blocks.inverse
    d_base = blocks_hat.gamma_base - blocks.gamma_base
    d_fiber = blocks_hat.gamma_fiber - blocks.gamma_fiber
    return LiftedTension(
        base=np.einsum("ab,kba->k", contract, d_base),
        fiber=np.einsum("ab,kba->k", contract, d_fiber),
    )


# ---------------------------------------------------------------------------
# symbolic assembly of induced-coordinate lifted charts


def _symbolic_det(rows) -> ExprAst:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    acc = ex.const(0.0)
    for j in range(n):
        e = rows[0][j]
        if isinstance(e, ex.Num) and e.value == 0.0:
            continue
        minor = [[r[jj] for jj in range(n) if jj != j] for r in rows[1:]]
        term = ex.mul(e, _symbolic_det(minor))
        acc = ex.add(acc, term) if j % 2 == 0 else ex.sub(acc, term)
    return acc


def _symbolic_inverse(components):
    """Adjugate-over-determinant inverse of a symmetric AST matrix; the
    (k, l) and (l, k) entries share one tree."""
    m = len(components)
    rows = [list(r) for r in components]
    det = _symbolic_det(rows)
    inv = [[None] * m for _ in range(m)]
    for k in range(m):
        for l in range(k, m):
            minor = [
                [rows[i][j] for j in range(m) if j != k]
                for i in range(m)
                if i != l
            ]
            cof = _symbolic_det(minor) if m > 1 else ex.const(1.0)
            if (k + l) % 2 == 1:
                cof = ex.neg(cof)
            inv[k][l] = inv[l][k] = ex.div(cof, det)
    return inv, det


def _symbolic_christoffels(g: ChartedMetric):
    """Christoffel symbol trees Gamma[k][i][j] over the base chart, with
    (i, j) entries shared, plus the component derivative trees."""
    m = g.dim
    comp = g.components
    dg = [[[None] * m for _ in range(m)] for _ in range(m)]  # [i][j][l]
    for i in range(m):
        for j in range(i, m):
            for l in range(m):
                d = ex.differentiate(comp[i][j], l)
                dg[i][j][l] = dg[j][i][l] = d
    ginv, _ = _symbolic_inverse(comp)
    gamma = [[[None] * m for _ in range(m)] for _ in range(m)]  # [k][i][j]
    for k in range(m):
        for i in range(m):
            for j in range(i, m):
                acc = ex.const(0.0)
                for l in range(m):
                    combo = ex.sub(ex.add(dg[j][l][i], dg[i][l][j]), dg[i][j][l])
                    acc = ex.add(acc, ex.mul(ginv[k][l], combo))
                gamma[k][i][j] = gamma[k][j][i] = ex.mul(ex.const(0.5), acc)
    return gamma, dg, ginv


_XN_RE = re.compile(r"^x(\d+)$")


def _fiber_names(coords, cotangent: bool) -> tuple[str, ...]:
    m = len(coords)
    matches = [_XN_RE.match(c) for c in coords]
    if all(mt is not None for mt in matches) and [
        int(mt.group(1)) for mt in matches
    ] == list(range(1, m + 1)):
        return tuple(f"x{i}" for i in range(m + 1, 2 * m + 1))
    prefix = "p" if cotangent else "u"
    names = tuple(f"{prefix}{i}" for i in range(1, m + 1))
    if set(names) & set(coords):
        raise ValueError(
            "cannot derive fiber coordinate names: base chart already uses "
            f"names of the form {prefix}<index>"
        )
    return names


def _sum(terms) -> ExprAst:
    acc = ex.const(0.0)
    for t in terms:
        acc = ex.add(acc, t)
    return acc


def lift_to_chart(
    g: ChartedMetric, kind: LiftKind, fiber_interval=(-1.0, 1.0)
) -> ChartedMetric:
    """Lifted metric as a charted metric on the induced 2m-dimensional
    chart, assembled symbolically (coframe products over the component
    trees; Christoffels from the cofactor inverse)."""
    m = g.dim
    fiber = _fiber_names(g.coords, kind.cotangent)
    coords = g.coords + fiber
    w = [ex.sym(m + h, fiber[h]) for h in range(m)]
    comp = g.components
    zero = ex.const(0.0)

    entries = [[zero] * (2 * m) for _ in range(2 * m)]

    if kind is LiftKind.COMPLETE_TM:
        for i in range(m):
            for j in range(i, m):
                entries[i][j] = _sum(
                    ex.mul(w[h], ex.differentiate(comp[i][j], h)) for h in range(m)
                )
            for j in range(m):
                entries[i][m + j] = comp[i][j]
    elif kind is LiftKind.HORIZONTAL_TM:
        gamma, _, _ = _symbolic_christoffels(g)
        A = [
            [_sum(ex.mul(w[h], gamma[k][h][i]) for h in range(m)) for i in range(m)]
            for k in range(m)
        ]
        for i in range(m):
            for j in range(i, m):
                entries[i][j] = _sum(
                    ex.add(
                        ex.mul(comp[i][k], A[k][j]), ex.mul(comp[j][k], A[k][i])
                    )
                    for k in range(m)
                )
            for j in range(m):
                entries[i][m + j] = comp[i][j]
    elif kind is LiftKind.SASAKI_TM:
        gamma, _, _ = _symbolic_christoffels(g)
        A = [
            [_sum(ex.mul(w[h], gamma[k][h][i]) for h in range(m)) for i in range(m)]
            for k in range(m)
        ]
        for i in range(m):
            for j in range(i, m):
                quad = _sum(
                    ex.mul(ex.mul(comp[k][l], A[k][i]), A[l][j])
                    for k in range(m)
                    for l in range(m)
                )
                entries[i][j] = ex.add(comp[i][j], quad)
                entries[m + i][m + j] = comp[i][j]
            for j in range(m):
                entries[i][m + j] = _sum(
                    ex.mul(A[k][i], comp[k][j]) for k in range(m)
                )
    elif kind is LiftKind.SASAKI_CTM:
        gamma, _, ginv = _symbolic_christoffels(g)
        B = [[None] * m for _ in range(m)]
        for k in range(m):
            for i in range(k, m):
                B[k][i] = B[i][k] = _sum(
                    ex.mul(w[a], gamma[a][k][i]) for a in range(m)
                )
        for i in range(m):
            for j in range(i, m):
                quad = _sum(
                    ex.mul(ex.mul(ginv[k][l], B[k][i]), B[l][j])
                    for k in range(m)
                    for l in range(m)
                )
                entries[i][j] = ex.add(comp[i][j], quad)
                entries[m + i][m + j] = ginv[i][j]
            for j in range(m):
                entries[i][m + j] = ex.neg(
                    _sum(ex.mul(B[k][i], ginv[k][j]) for k in range(m))
                )
    else:
        raise ValueError(f"unknown lift kind: {kind!r}")

    size_memo: dict = {}
    total = 0
    for i in range(2 * m):
        for j in range(i, 2 * m):
            total += ex.tree_size(entries[i][j], size_memo)
    if total > MAX_LIFT_TREE_SIZE:
        raise RuntimeError(
            f"assembled lifted components have {total} printed nodes, "
            f"over the {MAX_LIFT_TREE_SIZE} cap; this chart is too large "
            "to lift symbolically"
        )

    lo, hi = fiber_interval
    domain = g.domain + tuple((float(lo), float(hi)) for _ in range(m))
    return ChartedMetric(coords, mirror_components(entries), domain)


# ---------------------------------------------------------------------------
# frame changes (oracle support)


@dataclass(frozen=True)
class FrameChange:
    """Adapted-frame vectors expressed in the induced coordinate frame:
    columns of ``T``; ``dT[P, A, Q] = d_Q T[P, A]`` over the chart."""

    T: np.ndarray
    dT: np.ndarray


def adapted_frame_at(g: ChartedMetric, kind: LiftKind, q: FiberPoint) -> FrameChange:
    m = g.dim
    x, w = q.base, q.fiber
    gamma, dgamma = christoffel_and_derivative_at(g, x)
    T = np.eye(2 * m)
    dT = np.zeros((2 * m, 2 * m, 2 * m))
    if kind is LiftKind.COMPLETE_TM:
        return FrameChange(T, dT)
    if kind.cotangent:
        # delta_i = d_i + p_a Gamma^a_{ki} d/dp_k
        B = np.einsum("a,aki->ki", w, gamma)
        T[m:, :m] = B
        dT[m:, :m, :m] = np.einsum("a,akiq->kiq", w, dgamma)
        dT[m:, :m, m:] = np.einsum("aki->kia", gamma)
    else:
        # delta_i = d_i - u^h Gamma^k_{hi} d/du^k
        A = np.einsum("h,khi->ki", w, gamma)
        T[m:, :m] = -A
        dT[m:, :m, :m] = -np.einsum("h,khiq->kiq", w, dgamma)
        dT[m:, :m, m:] = -np.einsum("khi->kih", gamma)
    return FrameChange(T, dT)


def connection_in_frame(gamma: np.ndarray, frame: FrameChange) -> np.ndarray:
    """Connection coefficients in the (generally anholonomic) frame:
    omega^C_{AB} from coordinate coefficients ``gamma[K, P, Q]``."""
    T, dT = frame.T, frame.dT
    term = np.einsum("pa,qb,kpq->kab", T, T, gamma) + np.einsum(
        "pa,kbp->kab", T, dT
    )
    return np.einsum("ck,kab->cab", np.linalg.inv(T), term)


def components_in_adapted_frame(frame: FrameChange, v: np.ndarray) -> np.ndarray:
    """Components of a chart-frame vector in the adapted frame."""
    return np.linalg.solve(frame.T, v)


def fiber_lattice(
    g: ChartedMetric, count: int, seed: int, fiber_interval=(-1.0, 1.0)
) -> list[FiberPoint]:
    """Deterministic fiber points: lattice over base box x fiber box."""
    from .harmonic import lattice_points

    m = g.dim
    lo, hi = fiber_interval
    domain = g.domain + tuple((float(lo), float(hi)) for _ in range(m))
    pts = lattice_points(domain, count, seed)
    return [FiberPoint(p[:m], p[m:]) for p in pts]


def check_lift_conditions(
    g: ChartedMetric,
    ghat: ChartedMetric,
    kind: LiftKind,
    samples: int = 64,
    tol: float = 1e-9,
    seed: int = 42,
    fiber_interval=(-1.0, 1.0),
):
    """Sampled verdict on the lifted-harmonicity trace conditions.

    Evaluates ``lifted_tension_at`` on a deterministic lattice of bundle
    points (shared base box x fiber box) and reports the worst residual
    over both output families; ``per_component_max`` lists the m base
    components followed by the m fiber components.  Bundle points whose
    base projection makes either metric near-degenerate are skipped and
    replaced, up to 10x oversampling.
    """
    from .harmonic import (
        DEGENERACY_EPS,
        HarmonicityReport,
        VERDICT_HARMONIC,
        VERDICT_NOT,
        lattice_points,
        shared_domain,
    )
    from .metric import metric_at

    if samples < 1:
        raise ValueError("samples must be at least 1")
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    m = g.dim
    lo, hi = fiber_interval
    domain = shared_domain(g, ghat) + tuple(
        (float(lo), float(hi)) for _ in range(m)
    )
    kept: list[np.ndarray] = []
    start = scanned = 0
    limit = 10 * samples
    while len(kept) < samples and scanned < limit:
        chunk = min(samples, limit - scanned)
        cand = lattice_points(domain, chunk, seed, start=start)
        start += chunk
        scanned += chunk
        det_a = np.linalg.det(metric_at(g, cand[:, :m]))
        det_b = np.linalg.det(metric_at(ghat, cand[:, :m]))
        ok = (np.abs(det_a) > DEGENERACY_EPS) & (np.abs(det_b) > DEGENERACY_EPS)
        for row, good in zip(cand, ok):
            if good and len(kept) < samples:
                kept.append(row)
    if len(kept) < samples:
        from .harmonic import SamplingExhausted

        raise SamplingExhausted(
            f"only {len(kept)} of {samples} bundle sample points had a "
            f"nondegenerate base after scanning {scanned} candidates"
        )

    per_component = np.zeros(2 * m)
    max_abs = -1.0
    worst = kept[0]
    for row in kept:
        q = FiberPoint(row[:m], row[m:])
        t = lifted_tension_at(g, ghat, kind, q)
        resid = np.concatenate([np.abs(t.base), np.abs(t.fiber)])
        per_component = np.maximum(per_component, resid)
        r = float(resid.max())
        if r > max_abs:
            max_abs = r
            worst = row
    verdict = VERDICT_HARMONIC if max_abs <= tol else VERDICT_NOT
    return HarmonicityReport(
        verdict=verdict,
        max_abs_residual=max_abs,
        worst_point=tuple(float(v) for v in worst),
        per_component_max=tuple(float(v) for v in per_component),
        samples_used=len(kept),
        tolerance=float(tol),
        seed=int(seed),
    )
