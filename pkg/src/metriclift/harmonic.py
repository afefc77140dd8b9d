"""Tension fields and sampled harmonicity verdicts.

A metric ``ghat`` is harmonic with respect to ``g`` (on the same chart)
when the identity map (M, g) -> (M, ghat) is harmonic, i.e. when

    tau^k = g^{ij} (Ghat^k_{ij} - G^k_{ij}) = 0   for every k,

with G, Ghat the Christoffel symbols of the two metrics.  The pair is
ordered: swapping the roles changes both the Christoffel difference and
the contracting inverse, and no symmetry across the swap is assumed.

``check_harmonic`` evaluates the residual on a deterministic
low-discrepancy lattice over the shared sampling box and renders a
verdict.  A sampled verdict never claims global harmonicity, hence the
wording "harmonic-on-samples".
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from . import exprlang as ex
from .exprlang import ExprAst
from .jets import Jet2
from .metric import (
    DEGENERACY_EPS,
    ChartedMetric,
    _gamma_from_jets,
    metric_at,
    metric_jets_at,
)

__all__ = [
    "CoordinateMap",
    "HarmonicityReport",
    "SamplingExhausted",
    "tension_identity_at",
    "tension_map_at",
    "check_harmonic",
    "lattice_points",
    "shared_domain",
]

VERDICT_HARMONIC = "harmonic-on-samples"
VERDICT_NOT = "not-harmonic"


class SamplingExhausted(RuntimeError):
    """Could not collect enough nondegenerate sample points."""


@dataclass(frozen=True)
class CoordinateMap:
    """Coordinate presentation of a smooth map: one expression per
    target coordinate, over the source coordinates."""

    source_coords: tuple[str, ...]
    target_coords: tuple[str, ...]
    components: tuple[ExprAst, ...]

    def __post_init__(self):
        if len(self.components) != len(self.target_coords):
            raise ValueError("one component expression per target coordinate")

    @classmethod
    def from_strings(cls, source_coords, target_coords, sources) -> "CoordinateMap":
        source_coords = tuple(source_coords)
        comps = tuple(ex.parse_expression(str(s), source_coords) for s in sources)
        return cls(source_coords, tuple(target_coords), comps)

    @property
    def source_dim(self) -> int:
        return len(self.source_coords)

    @property
    def target_dim(self) -> int:
        return len(self.target_coords)


@dataclass(frozen=True)
class HarmonicityReport:
    verdict: str
    max_abs_residual: float
    worst_point: tuple[float, ...]
    per_component_max: tuple[float, ...]
    samples_used: int
    tolerance: float
    seed: int

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "max_abs_residual": self.max_abs_residual,
            "worst_point": list(self.worst_point),
            "per_component_max": list(self.per_component_max),
            "samples_used": self.samples_used,
            "tolerance": self.tolerance,
            "seed": self.seed,
        }


def _require_same_chart(g: ChartedMetric, ghat: ChartedMetric):
    if g.dim != ghat.dim:
        raise ValueError(f"dimension mismatch: {g.dim} vs {ghat.dim}")
    if g.coords != ghat.coords:
        raise ValueError(
            f"coordinate names differ: {list(g.coords)} vs {list(ghat.coords)}"
        )


def tension_identity_at(g: ChartedMetric, ghat: ChartedMetric, x) -> np.ndarray:
    """Tension vector of the identity map (M, g) -> (M, ghat) at ``x``;
    accepts a point ``(m,)`` or batch ``(N, m)``."""
    _require_same_chart(g, ghat)
    G, dG, _ = metric_jets_at(g, x, order=1)
    Gh, dGh, _ = metric_jets_at(ghat, x, order=1)
    gamma, ginv, _ = _gamma_from_jets(G, dG, x)
    gamma_hat, _, _ = _gamma_from_jets(Gh, dGh, x)
    return np.einsum("...ij,...kij->...k", ginv, gamma_hat - gamma)


def tension_map_at(
    phi: CoordinateMap, g: ChartedMetric, h: ChartedMetric, x
) -> np.ndarray:
    """Tension vector of ``phi`` : (M, g) -> (N, h), length ``n``.

    tau^c = g^{ij} ( d_i d_j phi^c - G^k_{ij} d_k phi^c
                     + H^c_{ab}(phi(x)) d_i phi^a d_j phi^b ).
    """
    if tuple(phi.source_coords) != g.coords:
        raise ValueError("map source coordinates do not match the source chart")
    if tuple(phi.target_coords) != h.coords:
        raise ValueError("map target coordinates do not match the target chart")
    pt = np.asarray(x, dtype=float)
    m, n = phi.source_dim, phi.target_dim
    env = [Jet2.variable(pt[..., i], i, m) for i in range(m)]
    memo: dict = {}
    base = pt.shape[:-1]
    y = np.empty(base + (n,))
    dphi = np.empty(base + (n, m))
    d2phi = np.empty(base + (n, m, m))
    for c in range(n):
        out = ex.evaluate(phi.components[c], env, memo)
        if not isinstance(out, Jet2):
            out = Jet2.constant(np.broadcast_to(np.asarray(out, float), base), m)
        y[..., c] = out.value
        dphi[..., c, :] = out.grad
        d2phi[..., c, :, :] = out.hess

    for c, (lo, hi) in enumerate(h.domain):
        yc = y[..., c]
        if np.any(yc < lo - 1e-12) or np.any(yc > hi + 1e-12):
            raise ValueError(
                f"image leaves the target domain in coordinate "
                f"{h.coords[c]!r}: range [{yc.min()}, {yc.max()}] "
                f"vs [{lo}, {hi}]"
            )

    G, dG, _ = metric_jets_at(g, x, order=1)
    gamma, ginv, _ = _gamma_from_jets(G, dG, x)
    Gh, dGh, _ = metric_jets_at(h, y, order=1)
    gamma_h, _, _ = _gamma_from_jets(Gh, dGh, y)

    nabla = (
        d2phi
        - np.einsum("...kij,...ck->...cij", gamma, dphi)
        + np.einsum("...cab,...ai,...bj->...cij", gamma_h, dphi, dphi)
    )
    return np.einsum("...ij,...cij->...c", ginv, nabla)


# ---------------------------------------------------------------------------
# deterministic sampling


def _kronecker_alpha(d: int) -> np.ndarray:
    # unique real root > 1 of x^(d+1) = x + 1; alphas are its inverse powers
    x = 2.0
    for _ in range(64):
        x = x - (x ** (d + 1) - x - 1.0) / ((d + 1) * x**d - 1.0)
    return np.array([(1.0 / x) ** (j + 1) for j in range(d)])


def lattice_points(domain, count: int, seed: int, start: int = 0) -> np.ndarray:
    """``count`` quasi-uniform points of the box ``domain`` from an
    additive-recurrence lattice; deterministic given ``seed``.  ``start``
    continues the sequence (used when rejected points are replaced)."""
    dom = np.asarray(domain, dtype=float)
    d = dom.shape[0]
    alpha = _kronecker_alpha(d)
    offset = np.random.default_rng(seed).random(d)
    idx = np.arange(start + 1, start + count + 1, dtype=float)[:, None]
    frac = (offset[None, :] + idx * alpha[None, :]) % 1.0
    lo, hi = dom[:, 0], dom[:, 1]
    return lo[None, :] + frac * (hi - lo)[None, :]


def shared_domain(g: ChartedMetric, ghat: ChartedMetric):
    """Per-coordinate intersection of the two sampling boxes."""
    out = []
    for (alo, ahi), (blo, bhi) in zip(g.domain, ghat.domain):
        lo, hi = max(alo, blo), min(ahi, bhi)
        if lo > hi:
            raise ValueError("sampling domains do not intersect")
        out.append((lo, hi))
    return tuple(out)


def _collect_samples(g: ChartedMetric, ghat: ChartedMetric, samples: int, seed: int):
    """First ``samples`` lattice points where both metrics are
    nondegenerate, scanning at most 10x candidates."""
    domain = shared_domain(g, ghat)
    kept = []
    start = 0
    scanned = 0
    limit = 10 * samples
    while len(kept) < samples and scanned < limit:
        chunk = min(samples, limit - scanned)
        cand = lattice_points(domain, chunk, seed, start=start)
        start += chunk
        scanned += chunk
        det_a = np.linalg.det(metric_at(g, cand))
        det_b = np.linalg.det(metric_at(ghat, cand))
        ok = (np.abs(det_a) > DEGENERACY_EPS) & (np.abs(det_b) > DEGENERACY_EPS)
        for row, good in zip(cand, ok):
            if good and len(kept) < samples:
                kept.append(row)
    if len(kept) < samples:
        raise SamplingExhausted(
            f"only {len(kept)} of {samples} sample points were nondegenerate "
            f"after scanning {scanned} candidates"
        )
    return np.asarray(kept)


def check_harmonic(
    g: ChartedMetric,
    ghat: ChartedMetric,
    samples: int = 64,
    tol: float = 1e-9,
    seed: int = 42,
) -> HarmonicityReport:
    """Evaluate the identity-map tension on a deterministic lattice of the
    shared box and report the worst absolute residual."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    _require_same_chart(g, ghat)
    pts = _collect_samples(g, ghat, samples, seed)
    tau = tension_identity_at(g, ghat, pts)  # (samples, m)
    abs_tau = np.abs(tau)
    per_component = abs_tau.max(axis=0)
    per_sample = abs_tau.max(axis=1)
    worst = int(np.argmax(per_sample))  # first index on ties
    max_abs = float(per_sample[worst])
    verdict = VERDICT_HARMONIC if max_abs <= tol else VERDICT_NOT
    return HarmonicityReport(
        verdict=verdict,
        max_abs_residual=max_abs,
        worst_point=tuple(float(v) for v in pts[worst]),
        per_component_max=tuple(float(v) for v in per_component),
        samples_used=int(pts.shape[0]),
        tolerance=float(tol),
        seed=int(seed),
    )
