"""Dense operators, matrix product operators, and the contraction primitives.

Matrices are plain complex numpy arrays in row-major order.  A matrix acting
on a product of local spaces is indexed site-major: site 1 is the most
significant digit of the row/column index, exactly as ``np.kron`` builds it.

An MPO stores one rank-4 tensor per site with index order
(bond_left, row, col, bond_right); boundary bonds have dimension 1.  A
locally purified MPO (LPMPO) stores rank-4 tensors (bond_left, physical,
purification, bond_right) for an operator X, and represents the positive
semidefinite core C = X X^dagger.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceCapError, StructuralError

DEFAULT_DENSE_CAP = 4**10  # max number of entries of a materialized matrix


@dataclass(frozen=True)
class SiteStructure:
    """Decomposition of a big index into per-site local dimensions."""

    local_dims: tuple[int, ...]

    def __post_init__(self):
        if not self.local_dims or any(d < 1 for d in self.local_dims):
            raise StructuralError("all local dimensions must be >= 1")
        object.__setattr__(self, "local_dims", tuple(int(d) for d in self.local_dims))

    @property
    def num_sites(self) -> int:
        return len(self.local_dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.local_dims)


def is_hermitian(m: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = max(np.abs(m).max(), 1e-300)
    return np.abs(m - m.conj().T).max() <= rtol * scale


def min_eig_ratio(m: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian matrix, relative to its trace."""
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    tr = max(abs(np.trace(m).real), 1e-300)
    return float(w.min() / tr)


@dataclass
class MPO:
    """Matrix product operator: rank-4 site tensors (chi_l, row, col, chi_r)."""

    sites: list[np.ndarray]

    def __post_init__(self):
        if not self.sites:
            raise StructuralError("MPO needs at least one site")
        self.sites = [np.asarray(t, dtype=complex) for t in self.sites]
        for t in self.sites:
            if t.ndim != 4:
                raise StructuralError("MPO site tensors must have 4 indices")
        if self.sites[0].shape[0] != 1 or self.sites[-1].shape[-1] != 1:
            raise StructuralError("boundary bond dimensions must be 1")
        for a, b in zip(self.sites, self.sites[1:]):
            if a.shape[-1] != b.shape[0]:
                raise StructuralError(
                    f"adjacent bond dims mismatch: {a.shape[-1]} vs {b.shape[0]}"
                )

    @property
    def num_sites(self) -> int:
        return len(self.sites)

    @property
    def local_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[1] for t in self.sites)

    def bond_dims(self) -> list[int]:
        return [t.shape[0] for t in self.sites] + [1]

    def max_bond(self) -> int:
        return max(self.bond_dims())


@dataclass
class LPMPO:
    """Locally purified MPO for X; the core it represents is X X^dagger."""

    sites: list[np.ndarray]  # (chi_l, physical d, purification p, chi_r)

    def __post_init__(self):
        if not self.sites:
            raise StructuralError("LPMPO needs at least one site")
        self.sites = [np.asarray(t, dtype=complex) for t in self.sites]
        for t in self.sites:
            if t.ndim != 4:
                raise StructuralError("LPMPO site tensors must have 4 indices")
        if self.sites[0].shape[0] != 1 or self.sites[-1].shape[-1] != 1:
            raise StructuralError("boundary bond dimensions must be 1")
        for a, b in zip(self.sites, self.sites[1:]):
            if a.shape[-1] != b.shape[0]:
                raise StructuralError("adjacent bond dims mismatch")

    @property
    def num_sites(self) -> int:
        return len(self.sites)

    @property
    def local_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[1] for t in self.sites)


def _check_cap(entries: int, cap: int):
    if entries > cap:
        raise ResourceCapError(
            f"dense materialization of {entries} entries exceeds cap {cap}"
        )


def mpo_from_dense(
    matrix: np.ndarray,
    structure: SiteStructure,
    trunc_tol: float = 0.0,
) -> MPO:
    """Factor a dense matrix into an MPO by sequential SVD sweeps.

    Singular values are discarded, smallest first, while the accumulated
    squared discarded weight stays below (trunc_tol * ||matrix||_F)^2 split
    evenly over the bonds; the round-trip Frobenius error is then bounded by
    trunc_tol * ||matrix||_F.
    """
    if trunc_tol < 0:
        raise StructuralError("trunc_tol must be >= 0")
    matrix = np.asarray(matrix, dtype=complex)
    dims = structure.local_dims
    n = len(dims)
    total = structure.total_dim
    if matrix.shape != (total, total):
        raise StructuralError(
            f"matrix shape {matrix.shape} does not match site dims {dims}"
        )
    fro = np.linalg.norm(matrix)
    # bring the legs into per-site (row, col) pairs
    t = matrix.reshape(dims + dims)
    order = []
    for k in range(n):
        order += [k, n + k]
    t = np.transpose(t, order)

    budget = (trunc_tol * fro) ** 2 / max(n - 1, 1)
    sites = []
    chi = 1
    rest = t.reshape(chi * dims[0] * dims[0], -1)
    for k in range(n - 1):
        u, s, vh = np.linalg.svd(rest, full_matrices=False)
        keep = len(s)
        if trunc_tol == 0.0:
            cutoff = (s[0] if len(s) else 0.0) * 1e-14
            while keep > 1 and s[keep - 1] <= cutoff:
                keep -= 1
        else:
            discarded = 0.0
            while keep > 1 and discarded + s[keep - 1] ** 2 <= budget:
                discarded += s[keep - 1] ** 2
                keep -= 1
        sites.append(u[:, :keep].reshape(chi, dims[k], dims[k], keep))
        rest = s[:keep, None] * vh[:keep]
        chi = keep
        if k + 1 < n - 1:
            rest = rest.reshape(chi * dims[k + 1] * dims[k + 1], -1)
    sites.append(rest.reshape(chi, dims[-1], dims[-1], 1))
    return MPO(sites)


def mpo_to_dense(mpo: MPO, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Contract all bonds of an MPO into a dense matrix."""
    dims = mpo.local_dims
    total = math.prod(dims)
    _check_cap(total * total, cap)
    res = np.ones((1, 1, 1), dtype=complex)  # (rows, cols, bond)
    for t in mpo.sites:
        res = np.einsum("ija,arcb->irjcb", res, t)
        r, dr, c, dc, b = res.shape
        res = res.reshape(r * dr, c * dc, b)
    return res[:, :, 0]


def sandwich_contract(
    bra_locals: list[np.ndarray],
    core: MPO,
    ket_locals: list[np.ndarray],
) -> complex:
    """<(x) bra_1 x ... x bra_N | C | ket_1 x ... x ket_N> with an MPO core.

    The bra vectors are conjugated.  Cost is O(d^2 chi^2) per site.
    """
    if len(bra_locals) != core.num_sites or len(ket_locals) != core.num_sites:
        raise StructuralError("number of local vectors must match MPO sites")
    v = np.ones(1, dtype=complex)
    for t, bra, ket in zip(core.sites, bra_locals, ket_locals):
        bra = np.asarray(bra, dtype=complex)
        ket = np.asarray(ket, dtype=complex)
        if bra.shape != (t.shape[1],) or ket.shape != (t.shape[2],):
            raise StructuralError("local vector dims do not match MPO site dims")
        m = np.einsum("r,arcb,c->ab", bra.conj(), t, ket)
        v = v @ m
    return complex(v[0])


def lpmpo_materialize(lp: LPMPO, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Dense core C = X X^dagger of a locally purified MPO."""
    d_total = math.prod(t.shape[1] for t in lp.sites)
    p_total = math.prod(t.shape[2] for t in lp.sites)
    _check_cap(max(d_total * d_total, d_total * p_total), cap)
    x = mpo_to_dense(MPO([t for t in lp.sites]), cap=max(cap, d_total * p_total))
    return x @ x.conj().T


def lpmpo_sandwich(
    bra_locals: list[np.ndarray],
    lp: LPMPO,
    ket_locals: list[np.ndarray],
) -> complex:
    """<bra| X X^dagger |ket> via two half-contractions, never forming C."""
    if len(bra_locals) != lp.num_sites or len(ket_locals) != lp.num_sites:
        raise StructuralError("number of local vectors must match LPMPO sites")
    # transfer matrix over the (X bond, conj X bond) pair
    env = np.ones((1, 1), dtype=complex)
    for t, bra, ket in zip(lp.sites, bra_locals, ket_locals):
        bra = np.asarray(bra, dtype=complex)
        ket = np.asarray(ket, dtype=complex)
        if bra.shape != (t.shape[1],) or ket.shape != (t.shape[1],):
            raise StructuralError("local vector dims do not match LPMPO site dims")
        top = np.einsum("d,adpb->apb", bra.conj(), t)
        bot = np.einsum("d,adpb->apb", ket, t.conj())
        env = np.einsum("ac,apb,cpe->be", env, top, bot)
    return complex(env[0, 0])


def interleave_permutation(structure: SiteStructure) -> np.ndarray:
    """Index permutation sending plain Kronecker order (all legs of the first
    factor, then all legs of the second) to interleaved order (odd legs from
    the first factor, even legs from the second)."""
    dims = structure.local_dims
    n = len(dims)
    idx = np.arange(structure.total_dim**2).reshape(dims + dims)
    order = []
    for k in range(n):
        order += [k, n + k]
    return idx.transpose(order).ravel()


def vertical_tensor_product(
    a: np.ndarray, b: np.ndarray, structure: SiteStructure
) -> np.ndarray:
    """Site-interleaving tensor product: odd legs of the result index a,
    even legs index b.  Equals P (a kron b) P^T for the interleaving
    permutation P."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    dims = structure.local_dims
    total = structure.total_dim
    if a.shape != (total, total) or b.shape != (total, total):
        raise StructuralError("operands must be square with matching site dims")
    n = len(dims)
    k = np.kron(a, b)
    # rows of kron(a, b): (a-site legs..., b-site legs...); interleave them
    t = k.reshape(dims + dims + dims + dims)
    order = []
    for i in range(n):
        order += [i, n + i]
    order += [2 * n + j for j in order[: 2 * n]]
    t = np.transpose(t, order)
    return t.reshape(total * total, total * total)


def hadamard_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise StructuralError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


# ---------------------------------------------------------------------------
# JSON serialization

def _entries(t: np.ndarray) -> list[float]:
    flat = np.asarray(t, dtype=complex).ravel()
    out = np.empty(2 * flat.size)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out.tolist()


def _from_entries(entries: list[float], dims: list[int]) -> np.ndarray:
    arr = np.asarray(entries, dtype=float)
    return (arr[0::2] + 1j * arr[1::2]).reshape(dims)


def mpo_to_json(op: MPO | LPMPO) -> str:
    kind = "mpo" if isinstance(op, MPO) else "lpmpo"
    payload = {
        "kind": kind,
        "sites": [
            {"dims": list(t.shape), "entries": _entries(t)} for t in op.sites
        ],
    }
    return json.dumps(payload)


def mpo_from_json(text: str) -> MPO | LPMPO:
    payload = json.loads(text)
    sites = [_from_entries(s["entries"], s["dims"]) for s in payload["sites"]]
    if payload["kind"] == "mpo":
        return MPO(sites)
    if payload["kind"] == "lpmpo":
        return LPMPO(sites)
    raise StructuralError(f"unknown operator kind {payload['kind']!r}")
