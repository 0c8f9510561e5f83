"""Systematic Reed-Solomon erasure coding over GF(2^8).

An object is zero-padded to a multiple of k, split into k fragments, and
expanded to n blocks with a Vandermonde-derived generator matrix whose top
k rows are the identity.  Any k blocks with distinct indices reconstruct
the original payload exactly; fewer raise :class:`InsufficientBlocksError`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_PRIM_POLY = 0x11D  # x^8 + x^4 + x^3 + x^2 + 1


class InsufficientBlocksError(ValueError):
    """Fewer than k blocks with distinct indices were supplied."""


class CorruptBlockError(ValueError):
    """Block payload lengths are inconsistent with the coding parameters."""


def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    exp = np.zeros(512, dtype=np.int64)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= _PRIM_POLY
    exp[255:510] = exp[0:255]
    return exp, log


_EXP, _LOG = _build_tables()


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(_EXP[_LOG[a] + _LOG[b]])


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("no inverse for 0 in GF(2^8)")
    return int(_EXP[255 - _LOG[a]])


def _gf_mul_vec(a: int, v: np.ndarray) -> np.ndarray:
    # scalar * vector with zero handling; tables are wide enough that the
    # log sum never needs a modulo.
    if a == 0:
        return np.zeros_like(v)
    out = _EXP[_LOG[a] + _LOG[v]]
    out[v == 0] = 0
    return out


def _gf_matrix_inverse(mat: list[list[int]]) -> list[list[int]]:
    """Gauss-Jordan inverse of a small square matrix over GF(2^8)."""
    k = len(mat)
    aug = [list(row) + [1 if i == j else 0 for j in range(k)] for i, row in enumerate(mat)]
    for col in range(k):
        pivot = next((r for r in range(col, k) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular matrix")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv_p = gf_inv(aug[col][col])
        aug[col] = [gf_mul(x, inv_p) for x in aug[col]]
        for r in range(k):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [x ^ gf_mul(factor, y) for x, y in zip(aug[r], aug[col])]
    return [row[k:] for row in aug]


@lru_cache(maxsize=None)
def generator_matrix(k: int, n: int) -> tuple[tuple[int, ...], ...]:
    """n x k generator whose top k rows are the identity.

    Built as F * inv(F[:k]) where F is the Vandermonde matrix on the
    evaluation points 0..n-1; any k rows of the result are invertible.
    """
    vand = []
    for x in range(n):
        row, p = [], 1
        for _ in range(k):
            row.append(p)
            p = gf_mul(p, x)
        vand.append(row)
    top_inv = _gf_matrix_inverse([vand[i] for i in range(k)])
    gen = []
    for i in range(n):
        gen.append(
            tuple(
                _xor_dot(vand[i], [top_inv[r][j] for r in range(k)])
                for j in range(k)
            )
        )
    return tuple(gen)


def _xor_dot(a: list[int], b: list[int]) -> int:
    acc = 0
    for x, y in zip(a, b):
        acc ^= gf_mul(x, y)
    return acc


@dataclass(frozen=True)
class CodingParams:
    """Erasure-coding shape: k data fragments expanded to n blocks."""

    k_fragments: int = 8
    n_blocks: int = 12

    def validate(self) -> None:
        if not (1 <= self.k_fragments <= self.n_blocks <= 255):
            raise ValueError(
                f"require 1 <= k <= n <= 255, got k={self.k_fragments} n={self.n_blocks}"
            )


def fragment_length(data_len: int, k: int) -> int:
    return (data_len + k - 1) // k


def encode(data: bytes, params: CodingParams) -> list[bytes]:
    """Split `data` into k fragments and emit n coded blocks.

    Blocks 0..k-1 are the zero-padded input split in order; the rest are
    parity combinations.  Every block has the same length.
    """
    params.validate()
    if len(data) == 0:
        raise ValueError("cannot encode an empty payload")
    k, n = params.k_fragments, params.n_blocks
    frag_len = fragment_length(len(data), k)
    padded = data + b"\x00" * (k * frag_len - len(data))
    frags = np.frombuffer(padded, dtype=np.uint8).reshape(k, frag_len).astype(np.int64)
    gen = generator_matrix(k, n)
    blocks: list[bytes] = []
    for i in range(n):
        if i < k:
            blocks.append(bytes(padded[i * frag_len : (i + 1) * frag_len]))
            continue
        acc = np.zeros(frag_len, dtype=np.int64)
        for j in range(k):
            acc ^= _gf_mul_vec(gen[i][j], frags[j])
        blocks.append(bytes(acc.astype(np.uint8)))
    return blocks


def decode(blocks, original_size: int, params: CodingParams) -> bytes:
    """Reconstruct the original payload from any k distinct-index blocks.

    `blocks` is a mapping of block_index -> payload or an iterable of
    (block_index, payload) pairs.
    """
    params.validate()
    if original_size <= 0:
        raise ValueError("original_size must be positive")
    k, n = params.k_fragments, params.n_blocks
    if hasattr(blocks, "items"):
        items = list(blocks.items())
    else:
        items = list(blocks)
    by_index: dict[int, bytes] = {}
    for idx, payload in items:
        if not (0 <= idx < n):
            raise ValueError(f"block index {idx} outside 0..{n - 1}")
        by_index.setdefault(idx, payload)
    if len(by_index) < k:
        raise InsufficientBlocksError(
            f"need {k} blocks with distinct indices, got {len(by_index)}"
        )
    frag_len = fragment_length(original_size, k)
    lengths = {len(p) for p in by_index.values()}
    if len(lengths) != 1 or lengths.pop() != frag_len:
        raise CorruptBlockError(
            f"block payload lengths inconsistent with fragment length {frag_len}"
        )
    use = sorted(by_index)[:k]
    gen = generator_matrix(k, n)
    sub = [list(gen[i]) for i in use]
    inv = _gf_matrix_inverse(sub)
    payloads = [
        np.frombuffer(by_index[i], dtype=np.uint8).astype(np.int64) for i in use
    ]
    out = bytearray()
    for j in range(k):
        acc = np.zeros(frag_len, dtype=np.int64)
        for r in range(k):
            acc ^= _gf_mul_vec(inv[j][r], payloads[r])
        out.extend(bytes(acc.astype(np.uint8)))
    return bytes(out[:original_size])
