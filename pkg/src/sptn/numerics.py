"""Dense linear-algebra kernels, a deterministic PRNG, and magnitude top-k.

Conventions used throughout the package:

* a *vector* is a 1-D ``float64`` numpy array,
* a *matrix* is a 2-D C-ordered ``float64`` numpy array,
* an *index set* is a 1-D ``int64`` array of unique indices in ascending
  order.

The sparse operations report the multiply-accumulate (MAC) count of the
sparse algorithm they model, i.e. the cost a per-element on-device
implementation would pay: ``|active| * width``.  At the array sizes this
package targets, a dense kernel over a zero-masked copy is both simpler and
faster on a host CPU than gather/scatter, so that is how the results are
computed; the returned MAC count, not host wall time, is the effort measure.
Masking also guarantees that a full active set reproduces the dense result
bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

Vector = np.ndarray
Matrix = np.ndarray
IndexSet = np.ndarray

_U64_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


def matvec(W: Matrix, x: Vector) -> Vector:
    """Return ``W @ x`` with an explicit shape check."""
    if W.ndim != 2 or x.ndim != 1 or W.shape[1] != x.shape[0]:
        raise ValueError(
            f"matvec: incompatible shapes, W is {W.shape}, x is {x.shape}"
        )
    return W @ x


def matvec_transposed(W: Matrix, d: Vector) -> Vector:
    """Return ``W.T @ d`` with an explicit shape check."""
    if W.ndim != 2 or d.ndim != 1 or W.shape[0] != d.shape[0]:
        raise ValueError(
            f"matvec_transposed: incompatible shapes, W is {W.shape}, d is {d.shape}"
        )
    return W.T @ d


def sparse_matvec_transposed(
    W: Matrix, d: Vector, active: IndexSet
) -> tuple[Vector, int]:
    """Compute ``W.T @ d`` using only the rows of ``d`` listed in ``active``.

    Returns the result vector together with the MAC count of the sparse
    product, ``len(active) * W.shape[1]``.  Entries of ``d`` outside the
    active set contribute nothing.
    """
    if W.ndim != 2 or d.ndim != 1 or W.shape[0] != d.shape[0]:
        raise ValueError(
            f"sparse_matvec_transposed: incompatible shapes, W is {W.shape}, "
            f"d is {d.shape}"
        )
    if active.size and (active.min() < 0 or active.max() >= d.shape[0]):
        raise IndexError(
            f"sparse_matvec_transposed: active index out of range for length "
            f"{d.shape[0]}"
        )
    if active.size == 0:
        return np.zeros(W.shape[1]), 0
    masked = np.zeros_like(d)
    masked[active] = d[active]
    return W.T @ masked, int(active.size) * W.shape[1]


def hadamard(a: Vector, b: Vector) -> Vector:
    """Element-wise product of two equal-length vectors."""
    if a.shape != b.shape:
        raise ValueError(f"hadamard: length mismatch, {a.shape} vs {b.shape}")
    return a * b


def outer_accumulate_rows(
    G: Matrix, d: Vector, a: Vector, active: IndexSet
) -> int:
    """Accumulate ``G[i, :] += d[i] * a`` for every ``i`` in ``active``.

    Rows outside the active set are left untouched.  ``G`` is modified in
    place; the return value is the MAC count ``len(active) * len(a)``.
    """
    if G.ndim != 2 or G.shape[0] != d.shape[0] or G.shape[1] != a.shape[0]:
        raise ValueError(
            f"outer_accumulate_rows: incompatible shapes, G is {G.shape}, "
            f"d is {d.shape}, a is {a.shape}"
        )
    if active.size == 0:
        return 0
    if active.min() < 0 or active.max() >= d.shape[0]:
        raise IndexError(
            f"outer_accumulate_rows: active index out of range for length "
            f"{d.shape[0]}"
        )
    if active.size == G.shape[0]:
        G += d[:, None] * a
    else:
        G[active] += d[active, None] * a
    return int(active.size) * a.shape[0]


def top_k_indices(v: Vector, k: int) -> IndexSet:
    """Indices of the ``k`` entries of ``v`` with the largest magnitude.

    Ties are broken in favour of the lower index, so the result is fully
    deterministic.  Selection runs in expected O(n) via introselect rather
    than a full sort.  The returned indices are sorted ascending.
    """
    n = v.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"top_k_indices: k={k} out of range for length {n}")
    if k == n:
        return np.arange(n, dtype=np.int64)
    mag = np.abs(v)
    boundary = mag[np.argpartition(mag, n - k)[n - k]]
    above = np.flatnonzero(mag > boundary)
    # Every element strictly above the boundary magnitude is selected; the
    # remaining slots go to boundary-magnitude elements at the lowest indices.
    fill = np.flatnonzero(mag == boundary)[: k - above.size]
    out = np.concatenate([above, fill])
    out.sort()
    return out.astype(np.int64, copy=False)


class Prng:
    """splitmix64 pseudo-random generator with a 64-bit state.

    The state advances by a fixed odd constant per raw draw, which makes the
    stream position a pure function of (seed, draw count).  Bulk fills
    therefore produce exactly the same values as repeated single draws, and
    every consumer of the same seed sees the same byte-for-byte stream.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _U64_MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _U64_MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX_1) & _U64_MASK
        z = ((z ^ (z >> 27)) * _MIX_2) & _U64_MASK
        return z ^ (z >> 31)

    def next_uniform(self) -> float:
        """One draw from [0, 1), using the top 53 bits of the raw output."""
        return (self.next_u64() >> 11) * _INV_2_53

    def next_gaussian(self) -> float:
        """One standard-normal draw; consumes exactly two uniforms.

        Uses the Box-Muller transform ``sqrt(-2 ln(1-u1)) * cos(2 pi u2)``;
        the ``1-u1`` flip maps the uniform's [0, 1) range onto (0, 1] so the
        logarithm is always finite.
        """
        u1 = self.next_uniform()
        u2 = self.next_uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def uniforms(self, n: int) -> Vector:
        """Vectorized equivalent of ``n`` successive :meth:`next_uniform` calls."""
        if n == 0:
            return np.zeros(0)
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(_GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * _GOLDEN) & _U64_MASK
        return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def gaussians(self, n: int) -> Vector:
        """Vectorized equivalent of ``n`` successive :meth:`next_gaussian` calls."""
        u = self.uniforms(2 * n)
        r = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))
        return r * np.cos(2.0 * np.pi * u[1::2])

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic Fisher-Yates permutation of ``range(n)``."""
        out = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            out[i], out[j] = out[j], out[i]
        return out
