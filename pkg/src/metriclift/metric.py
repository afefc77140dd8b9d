"""Charted pseudo-Riemannian metrics and their pointwise tensors.

A :class:`ChartedMetric` is a symmetric matrix of expression trees over
named coordinates together with a sampling box.  All derived quantities
(inverse, Christoffel symbols, curvature) are computed pointwise from
exact jets of the components; the functions below accept a single point
``(m,)`` or a batch ``(N, m)`` and return correspondingly shaped arrays.

Index conventions: 0-based internally, 1-based in reports and any error
text.  Christoffel symbols are stored as ``gamma[..., k, i, j]`` and the
curvature tensor as ``riem[..., k, i, j, h]`` with

    R(e_i, e_j) e_h = R^k_{ijh} e_k ,

antisymmetric in (i, j) bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import exprlang as ex
from .exprlang import ExprAst
from .jets import Jet2

__all__ = [
    "ChartedMetric",
    "ChristoffelSet",
    "CurvatureField",
    "MetricDegenerate",
    "DEGENERACY_EPS",
    "metric_at",
    "inverse_metric_at",
    "christoffel_at",
    "christoffel_and_derivative_at",
    "curvature_at",
    "metric_jets_at",
    "mirror_components",
]

DEGENERACY_EPS = 1e-12


class MetricDegenerate(Exception):
    """|det g| fell at or below the degeneracy threshold at a point."""

    def __init__(self, point, det: float):
        self.point = np.asarray(point, dtype=float)
        self.det = float(det)
        pt = ", ".join(repr(float(v)) for v in self.point)
        super().__init__(f"metric degenerate at ({pt}): det = {self.det!r}")


def mirror_components(entries: Sequence[Sequence[ExprAst]]):
    """Tuple-of-tuples component matrix where (i, j) and (j, i) are the
    same tree object (only the upper triangle of ``entries`` is read)."""
    m = len(entries)
    out = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(i, m):
            out[i][j] = out[j][i] = entries[i][j]
    return tuple(tuple(row) for row in out)


@dataclass(frozen=True)
class ChartedMetric:
    """Dimension, coordinate names, symmetric component matrix, sampling box."""

    coords: tuple[str, ...]
    components: tuple[tuple[ExprAst, ...], ...]
    domain: tuple[tuple[float, float], ...]

    def __post_init__(self):
        m = len(self.coords)
        if m < 1:
            raise ValueError("metric dimension must be at least 1")
        if len(set(self.coords)) != m:
            raise ValueError("coordinate names must be distinct")
        if len(self.components) != m or any(len(r) != m for r in self.components):
            raise ValueError("component matrix shape does not match dimension")
        for i in range(m):
            for j in range(i + 1, m):
                if self.components[i][j] is not self.components[j][i]:
                    raise ValueError(
                        "component matrix must be stored symmetrically: "
                        f"entries ({i + 1},{j + 1}) and ({j + 1},{i + 1}) differ"
                    )
        if len(self.domain) != m:
            raise ValueError("domain must give one interval per coordinate")
        for lo, hi in self.domain:
            if not (lo <= hi):
                raise ValueError(f"empty domain interval [{lo}, {hi}]")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @classmethod
    def from_strings(cls, coords, entries, domain) -> "ChartedMetric":
        """Parse a matrix of expression strings.  Mirror entries must be
        textually identical; the parsed upper triangle is shared."""
        coords = tuple(coords)
        m = len(coords)
        if len(entries) != m or any(len(r) != m for r in entries):
            raise ValueError("component matrix shape does not match dimension")
        for i in range(m):
            for j in range(i + 1, m):
                if str(entries[i][j]).strip() != str(entries[j][i]).strip():
                    raise ValueError(
                        f"metric entries ({i + 1},{j + 1}) and ({j + 1},{i + 1}) "
                        "must be identical"
                    )
        parsed = [
            [ex.parse_expression(str(entries[i][j]), coords) if j >= i else None for j in range(m)]
            for i in range(m)
        ]
        dom = tuple((float(lo), float(hi)) for lo, hi in domain)
        return cls(coords, mirror_components(parsed), dom)

    def component_sources(self) -> list[list[str]]:
        return [[ex.to_source(e) for e in row] for row in self.components]


@dataclass(frozen=True)
class ChristoffelSet:
    """Levi-Civita connection coefficients, ``array[..., k, i, j]``;
    symmetric in (i, j) exactly."""

    array: np.ndarray

    def __getitem__(self, k: int) -> np.ndarray:
        return self.array[..., k, :, :]

    @property
    def dim(self) -> int:
        return self.array.shape[-1]


@dataclass(frozen=True)
class CurvatureField:
    """Curvature components ``array[..., k, i, j, h]`` of R(e_i,e_j)e_h."""

    array: np.ndarray

    @property
    def dim(self) -> int:
        return self.array.shape[-1]


def _point_env(g: ChartedMetric, x) -> np.ndarray:
    pt = np.asarray(x, dtype=float)
    if pt.shape[-1] != g.dim:
        raise ValueError(
            f"point has {pt.shape[-1]} entries, chart has {g.dim} coordinates"
        )
    return pt


def metric_at(g: ChartedMetric, x) -> np.ndarray:
    """Component matrix at ``x``; symmetric by construction."""
    pt = _point_env(g, x)
    m = g.dim
    env = [pt[..., i] for i in range(m)]
    memo: dict = {}
    out = np.empty(pt.shape[:-1] + (m, m))
    for i in range(m):
        for j in range(i, m):
            v = ex.evaluate(g.components[i][j], env, memo)
            out[..., i, j] = v
            out[..., j, i] = out[..., i, j]
    return out


def metric_jets_at(g: ChartedMetric, x, order: int = 2):
    """Values and derivatives of all components in one pass.

    Returns ``(G, dG, d2G)`` with ``dG[..., i, j, k] = d_k g_ij`` and
    ``d2G[..., i, j, k, l] = d_k d_l g_ij`` (``d2G`` is ``None`` for
    ``order=1``).  Shared subtrees across components are evaluated once.
    """
    pt = _point_env(g, x)
    m = g.dim
    env = [Jet2.variable(pt[..., i], i, m, order) for i in range(m)]
    memo: dict = {}
    base = pt.shape[:-1]
    G = np.empty(base + (m, m))
    dG = np.empty(base + (m, m, m))
    d2G = np.empty(base + (m, m, m, m)) if order >= 2 else None
    for i in range(m):
        for j in range(i, m):
            out = ex.evaluate(g.components[i][j], env, memo)
            if not isinstance(out, Jet2):
                out = Jet2.constant(np.broadcast_to(np.asarray(out, float), base), m, order)
            G[..., i, j] = G[..., j, i] = out.value
            dG[..., i, j, :] = dG[..., j, i, :] = out.grad
            if order >= 2:
                d2G[..., i, j, :, :] = d2G[..., j, i, :, :] = out.hess
    return G, dG, d2G


def _checked_inverse(G: np.ndarray, x) -> np.ndarray:
    det = np.linalg.det(G)
    bad = np.abs(det) <= DEGENERACY_EPS
    if np.any(bad):
        pt = np.asarray(x, dtype=float)
        if pt.ndim > 1:
            idx = int(np.argmax(np.asarray(bad).ravel()))
            flat_pts = pt.reshape(-1, pt.shape[-1])
            raise MetricDegenerate(flat_pts[idx], np.asarray(det).ravel()[idx])
        raise MetricDegenerate(pt, float(det))
    return np.linalg.inv(G)


def inverse_metric_at(g: ChartedMetric, x) -> np.ndarray:
    """Matrix inverse of the components at ``x`` (LU with partial
    pivoting); raises :class:`MetricDegenerate` when |det| <= 1e-12."""
    return _checked_inverse(metric_at(g, x), x)


def _gamma_from_jets(G, dG, x):
    ginv = _checked_inverse(G, x)
    # C[..., l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    di_gjl = np.einsum("...jli->...lij", dG)
    dj_gil = np.einsum("...ilj->...lij", dG)
    dl_gij = np.einsum("...ijl->...lij", dG)
    C = di_gjl + dj_gil - dl_gij
    gamma = 0.5 * np.einsum("...kl,...lij->...kij", ginv, C)
    return gamma, ginv, C


def christoffel_at(g: ChartedMetric, x) -> ChristoffelSet:
    """Levi-Civita symbols from first jets of the components."""
    G, dG, _ = metric_jets_at(g, x, order=1)
    gamma, _, _ = _gamma_from_jets(G, dG, x)
    return ChristoffelSet(gamma)


def christoffel_and_derivative_at(g: ChartedMetric, x):
    """``(gamma, dgamma)`` with ``dgamma[..., k, i, j, p] = d_p Gamma^k_ij``
    computed from exact second jets (needed by curvature and the
    fiber-contracted blocks of complete lifts)."""
    G, dG, d2G = metric_jets_at(g, x, order=2)
    gamma, ginv, C = _gamma_from_jets(G, dG, x)
    # d_p g^{kl} = -g^{ka} (d_p g_ab) g^{bl}
    dginv = -np.einsum("...ka,...abp,...bl->...klp", ginv, dG, ginv)
    dC = (
        np.einsum("...jlip->...lijp", d2G)
        + np.einsum("...iljp->...lijp", d2G)
        - np.einsum("...ijlp->...lijp", d2G)
    )
    dgamma = 0.5 * (
        np.einsum("...klp,...lij->...kijp", dginv, C)
        + np.einsum("...kl,...lijp->...kijp", ginv, dC)
    )
    return gamma, dgamma


def curvature_at(g: ChartedMetric, x) -> CurvatureField:
    """Curvature tensor R^k_{ijh}; antisymmetry in (i, j) is exact."""
    gamma, dgamma = christoffel_and_derivative_at(g, x)
    # d_i Gamma^k_{jh} lives at dgamma[..., k, j, h, i]
    P = np.einsum("...kjhi->...kijh", dgamma)
    Q = np.einsum("...kil,...ljh->...kijh", gamma, gamma)
    riem = (P - np.swapaxes(P, -3, -2)) + (Q - np.swapaxes(Q, -3, -2))
    return CurvatureField(riem)
