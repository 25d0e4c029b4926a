"""Four-step Mercer decomposition of entangled tensor kernels.

Given K(x, x') = <F(x)| C |F(x')> with component functions {F_i}, the steps
are: (1) Gram-Schmidt orthonormalization of the components in coefficient
space against the component Gram matrix, detecting linear dependence;
(2) padding of the orthonormalizing map to an invertible lower-triangular L;
(3) core transform C_hat = (L^dag)^{-1} C L^{-1} and truncation to the
independent block; (4) diagonalization, yielding non-negative eigenvalues
with orthonormal eigenfunctions.

Inner products are over a declared measure: exact Fourier bookkeeping for
trigonometric components on [-pi, pi]^d with the uniform measure, tensorized
Gauss-Legendre quadrature, or Monte Carlo.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ValidationError
from .etk import EtkKernel
from .feature_maps import trig_eval, trig_inner


# ---------------------------------------------------------------------------
# Inner-product providers

class AnalyticFourierProvider:
    """Exact inner products of trigonometric polynomials under the uniform
    measure on [-pi, pi]^d."""

    kind = "analytic-fourier"

    def gram(self, basis: "FunctionBasis") -> np.ndarray:
        if basis.trig is None:
            raise ValidationError(
                "analytic Fourier provider needs trigonometric components"
            )
        d = len(basis.trig)
        g = np.empty((d, d), dtype=complex)
        for i in range(d):
            for j in range(i, d):
                v = trig_inner(basis.trig[i], basis.trig[j])
                g[i, j] = v
                g[j, i] = np.conj(v)
        return g


class QuadratureProvider:
    """Tensorized Gauss-Legendre quadrature on [-pi, pi]^d (d <= 3)."""

    kind = "quadrature"

    def __init__(self, nodes_per_dim: int = 32):
        self.nodes_per_dim = nodes_per_dim

    def points_weights(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        if dim > 3:
            raise ValidationError("quadrature provider supports dim <= 3")
        t, w = np.polynomial.legendre.leggauss(self.nodes_per_dim)
        x1 = np.pi * t
        w1 = w / 2.0  # normalized uniform measure per dimension
        grids = np.meshgrid(*([x1] * dim), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        wts = np.ones(pts.shape[0])
        for k in range(dim):
            wts *= np.meshgrid(*([w1] * dim), indexing="ij")[k].ravel()
        return pts, wts

    def gram(self, basis: "FunctionBasis") -> np.ndarray:
        pts, wts = self.points_weights(basis.data_dim)
        f = basis.eval_matrix(pts)
        return f.conj().T @ (wts[:, None] * f)


class MonteCarloProvider:
    """Uniform Monte Carlo inner products on [-pi, pi]^d."""

    kind = "monte-carlo"

    def __init__(self, samples: int = 100_000, seed: int = 0):
        self.samples = samples
        self.seed = seed

    def points_weights(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(self.seed)
        pts = rng.uniform(-np.pi, np.pi, size=(self.samples, dim))
        wts = np.full(self.samples, 1.0 / self.samples)
        return pts, wts

    def gram(self, basis: "FunctionBasis") -> np.ndarray:
        pts, wts = self.points_weights(basis.data_dim)
        f = basis.eval_matrix(pts)
        return f.conj().T @ (wts[:, None] * f)


@dataclass
class FunctionBasis:
    """Component functions with a declared inner-product provider."""

    funcs: list[Callable[[np.ndarray], complex]]
    data_dim: int
    provider: object
    trig: Optional[list[dict]] = None

    @property
    def size(self) -> int:
        return len(self.funcs)

    def eval_matrix(self, pts: np.ndarray) -> np.ndarray:
        """(num_points, num_components) matrix of component values."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty((pts.shape[0], self.size), dtype=complex)
        for j, f in enumerate(self.funcs):
            out[:, j] = [f(p) for p in pts]
        return out

    def eval_components(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([f(x) for f in self.funcs], dtype=complex)

    def gram(self) -> np.ndarray:
        g = self.provider.gram(self)
        g = (g + g.conj().T) / 2.0
        w = np.linalg.eigvalsh(g)
        if w.min() < -1e-8 * max(abs(np.trace(g).real), 1e-300):
            raise ValidationError("inner-product provider is indefinite")
        return g


def basis_from_etk(kernel: EtkKernel, provider: Optional[object] = None) -> FunctionBasis:
    """Component-function basis of an ETK's product feature map.

    Uses exact Fourier inner products when all components carry a
    trigonometric representation, otherwise Gauss-Legendre quadrature.
    """
    trig = None
    if kernel.site_trig is not None:
        trig = kernel.component_functions()
        funcs = [(lambda x, t=t: trig_eval(t, x)) for t in trig]
    else:
        dims = kernel.local_dims

        def make(idx):
            def f(x):
                vecs = kernel.local_vectors(x)
                rem, out = idx, 1.0 + 0.0j
                for k in range(len(dims) - 1, -1, -1):
                    out *= vecs[k][rem % dims[k]]
                    rem //= dims[k]
                return out

            return f

        total = int(np.prod(dims))
        funcs = [make(i) for i in range(total)]
    if provider is None:
        provider = (
            AnalyticFourierProvider() if trig is not None else QuadratureProvider()
        )
    return FunctionBasis(
        funcs=funcs, data_dim=kernel.data_dim, provider=provider, trig=trig
    )


# ---------------------------------------------------------------------------
# Step 1: Gram-Schmidt in coefficient space

@dataclass
class GramSchmidtResult:
    l_tilde: np.ndarray  # (rank, rank) lower-triangular over independents
    rank: int
    independent: list[int]  # original component indices, in processed order
    dependent: list[int]
    alphas: np.ndarray  # (num_dependent, rank): F_dep = sum alphas . F_indep
    gram: np.ndarray  # component Gram in original order

    @property
    def perm(self) -> list[int]:
        return self.independent + self.dependent


def gram_schmidt_basis(basis: FunctionBasis, dep_tol: float = 1e-8) -> GramSchmidtResult:
    """Orthonormalize the components against their Gram matrix.

    Components whose residual norm falls below dep_tol times their own norm
    are declared linearly dependent and expanded over the independents.
    """
    if dep_tol <= 0:
        raise ValidationError("dep_tol must be positive")
    g = basis.gram()
    d = g.shape[0]
    # Euclidean embedding of the components: columns w_i of sqrt(G) satisfy
    # w_i^dag w_j = G_ij exactly, so residual norms are computed stably even
    # when G is singular.
    lam, q = np.linalg.eigh(g)
    # rounding-level eigenvalues would seed spurious directions after the
    # square root, so clip them relative to the largest eigenvalue
    floor = max(d, 1) * np.finfo(float).eps * max(lam.max(), 0.0)
    lam = np.where(lam > floor, lam, 0.0)
    w = (np.sqrt(lam)[:, None]) * q.conj().T  # column i embeds component i
    ortho: list[np.ndarray] = []  # orthonormal embedded vectors
    rows: list[np.ndarray] = []  # matching coefficient vectors over components
    independent: list[int] = []
    dependent: list[int] = []
    alpha_rows: list[np.ndarray] = []
    for i in range(d):
        v = w[:, i].copy()
        c = np.zeros(d, dtype=complex)
        c[i] = 1.0
        for _ in range(2):  # re-orthogonalization for numerical stability
            for qvec, rvec in zip(ortho, rows):
                coef = qvec.conj() @ v
                v = v - coef * qvec
                c = c - coef * rvec
        norm = np.linalg.norm(v)
        own = np.linalg.norm(w[:, i])
        if norm <= dep_tol * max(own, 1e-300):
            dependent.append(i)
            alpha, *_ = np.linalg.lstsq(
                w[:, independent], w[:, i], rcond=None
            )
            alpha_rows.append(alpha)
        else:
            ortho.append(v / norm)
            rows.append(c / norm)
            independent.append(i)
    rank = len(independent)
    l_tilde = np.zeros((rank, rank), dtype=complex)
    for a, r in enumerate(rows):
        l_tilde[a] = r[independent]
    # a dependent found early only involves the independents seen before it;
    # pad its expansion with zeros up to the final rank
    alphas = np.zeros((len(alpha_rows), rank), dtype=complex)
    for a, row in enumerate(alpha_rows):
        alphas[a, : row.size] = row
    return GramSchmidtResult(
        l_tilde=l_tilde,
        rank=rank,
        independent=independent,
        dependent=dependent,
        alphas=alphas,
        gram=g,
    )


# ---------------------------------------------------------------------------
# Step 2: padding

def pad_L(gs: GramSchmidtResult) -> np.ndarray:
    """Invertible lower-triangular L over permuted order (independents first):
    top block l_tilde, dependent row i carrying -alpha and a unit diagonal.
    L |F_perm(x)> = (e_1(x), ..., e_rank(x), 0, ..., 0)."""
    d = gs.gram.shape[0]
    out = np.zeros((d, d), dtype=complex)
    out[: gs.rank, : gs.rank] = gs.l_tilde
    for a in range(len(gs.dependent)):
        out[gs.rank + a, : gs.rank] = -gs.alphas[a]
        out[gs.rank + a, gs.rank + a] = 1.0
    return out


# ---------------------------------------------------------------------------
# Step 3: core transform and truncation

def transform_truncate(core: np.ndarray, gs: GramSchmidtResult) -> np.ndarray:
    """C_tilde = upper-left rank block of (L^dag)^{-1} C_perm L^{-1}."""
    core = np.asarray(core, dtype=complex)
    d = gs.gram.shape[0]
    if core.shape != (d, d):
        raise ValidationError("core dimension does not match component count")
    perm = gs.perm
    c_perm = core[np.ix_(perm, perm)]
    big_l = pad_L(gs)
    cond = np.linalg.cond(big_l)
    if cond > 1e12:
        warnings.warn(f"orthonormalizer is ill-conditioned (cond={cond:.2e})")
    linv = np.linalg.inv(big_l)
    c_hat = linv.conj().T @ c_perm @ linv
    return c_hat[: gs.rank, : gs.rank]


# ---------------------------------------------------------------------------
# Step 4: diagonalization

@dataclass
class MercerDecomposition:
    """Eigenvalues (non-increasing) with orthonormal eigenfunctions.

    u maps the orthonormal basis (e_1 ... e_rank) to eigenfunctions; rows of
    component_coeffs expand each eigenfunction over the original components,
    so eigenfunction i evaluates as sum_j component_coeffs[i, j] F_j(x).
    """

    eigenvalues: np.ndarray
    u: np.ndarray
    component_coeffs: np.ndarray
    basis: Optional[FunctionBasis] = None
    basis_description: str = ""

    @property
    def rank(self) -> int:
        return self.eigenvalues.size

    def eigenfunctions_at(self, x: np.ndarray) -> np.ndarray:
        if self.basis is None:
            raise ValidationError("decomposition carries no evaluable basis")
        return self.component_coeffs @ self.basis.eval_components(x)

    def to_json(self) -> str:
        return json.dumps(
            {
                "eigenvalues": self.eigenvalues.tolist(),
                "basis": self.basis_description,
                "U": np.column_stack(
                    [self.u.real.ravel(), self.u.imag.ravel()]
                ).ravel().tolist(),
                "rank": int(self.rank),
            }
        )


def diagonalize(
    c_tilde: np.ndarray,
    gs: GramSchmidtResult,
    basis: Optional[FunctionBasis] = None,
    basis_description: str = "",
) -> MercerDecomposition:
    """Spectral decomposition C_tilde = U^dag D U with sorted spectrum."""
    c_tilde = np.asarray(c_tilde, dtype=complex)
    scale = max(np.abs(c_tilde).max(), 1e-300)
    if np.abs(c_tilde - c_tilde.conj().T).max() > 1e-10 * scale:
        raise ValidationError("transformed core is not Hermitian")
    w, v = np.linalg.eigh((c_tilde + c_tilde.conj().T) / 2.0)
    order = np.argsort(w)[::-1]
    w = w[order]
    u = v.conj().T[order]  # rows: eigenfunction coefficients over e-basis
    d = gs.gram.shape[0]
    coeffs_perm = u @ gs.l_tilde  # over independent components, permuted order
    coeffs = np.zeros((gs.rank, d), dtype=complex)
    coeffs[:, gs.independent] = coeffs_perm
    return MercerDecomposition(
        eigenvalues=w,
        u=u,
        component_coeffs=coeffs,
        basis=basis,
        basis_description=basis_description,
    )


def reconstruct_kernel(dec: MercerDecomposition, x, x2) -> complex:
    """sum_i gamma_i conj(e_i(x)) e_i(x')."""
    f1 = dec.eigenfunctions_at(np.asarray(x, dtype=float))
    f2 = dec.eigenfunctions_at(np.asarray(x2, dtype=float))
    return complex(np.sum(dec.eigenvalues * f1.conj() * f2))


def eigenfunction_gram(dec: MercerDecomposition, gs: GramSchmidtResult) -> np.ndarray:
    """Gram of the eigenfunctions under the declared measure (should be I)."""
    c = dec.component_coeffs
    return c.conj() @ gs.gram @ c.T


def mercer_decompose(
    kernel: EtkKernel,
    provider: Optional[object] = None,
    dep_tol: float = 1e-8,
) -> tuple[MercerDecomposition, GramSchmidtResult]:
    """Full pipeline from an ETK with a materializable core."""
    basis = basis_from_etk(kernel, provider=provider)
    gs = gram_schmidt_basis(basis, dep_tol=dep_tol)
    c_tilde = transform_truncate(kernel.dense_core(), gs)
    dec = diagonalize(
        c_tilde,
        gs,
        basis=basis,
        basis_description=getattr(basis.provider, "kind", "custom"),
    )
    return dec, gs
