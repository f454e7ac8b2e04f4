"""Morgan circular fingerprints and Dice similarity.

Each atom starts from a local-invariant identifier; every expansion round
rehashes an atom's identifier together with the sorted (bond order, neighbor
identifier) pairs, capturing its circular environment one bond further out.
All identifiers from all rounds fold modulo ``nbits`` into one bit set.

Identifiers are 64-bit FNV-1a hashes over a fixed byte encoding (offset basis
0xcbf29ce484222325, prime 0x100000001b3), so fingerprints are byte-identical
across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

from molrag.smiles.canon import atom_invariant
from molrag.smiles.model import Molecule

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def _encode_initial(invariant: tuple) -> bytes:
    element, aromatic, charge, isotope, explicit_h, degree = invariant
    sym = element.encode("utf-8")
    return (
        b"A"
        + len(sym).to_bytes(1, "big")
        + sym
        + (b"\x01" if aromatic else b"\x00")
        + (charge & 0xFFFF).to_bytes(2, "big")
        + (isotope & 0xFFFF).to_bytes(2, "big")
        + (explicit_h & 0xFFFF).to_bytes(2, "big")
        + degree.to_bytes(2, "big")
    )


def _encode_round(prev_id: int, pairs: list[tuple[int, int]]) -> bytes:
    out = [b"E", prev_id.to_bytes(8, "big")]
    for order_code, nbr_id in pairs:
        out.append(order_code.to_bytes(1, "big"))
        out.append(nbr_id.to_bytes(8, "big"))
    return b"".join(out)


class FingerprintError(ValueError):
    pass


class ParamMismatch(FingerprintError):
    """Fingerprints built with different parameters cannot be compared."""


class DegenerateInput(FingerprintError):
    """Dice similarity is undefined when both bit sets are empty."""


@dataclass(frozen=True)
class FingerprintParams:
    radius: int = 2
    nbits: int = 2048

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        if self.nbits < 64 or self.nbits & (self.nbits - 1):
            raise ValueError("nbits must be a power of two >= 64")


@dataclass(frozen=True)
class MorganFingerprint:
    bits: frozenset[int]
    nbits: int
    radius: int

    def __post_init__(self) -> None:
        if any(b < 0 or b >= self.nbits for b in self.bits):
            raise ValueError("bit index out of range")

    def to_hex(self) -> str:
        """Hex-encoded bitmap, lowest bit index first."""
        raw = bytearray(self.nbits // 8)
        for bit in self.bits:
            raw[bit // 8] |= 1 << (bit % 8)
        return bytes(raw).hex()

    @classmethod
    def from_hex(cls, text: str, nbits: int, radius: int) -> "MorganFingerprint":
        raw = bytes.fromhex(text)
        if len(raw) != nbits // 8:
            raise ValueError("bitmap length does not match nbits")
        bits = frozenset(
            i for i in range(nbits) if raw[i // 8] & (1 << (i % 8))
        )
        return cls(bits=bits, nbits=nbits, radius=radius)


def morgan_environments(
    mol: Molecule, params: FingerprintParams
) -> list[tuple[int, int, int]]:
    """All (atom index, round, identifier) environments up to the radius.

    Round 0 identifiers hash the atom's local invariant; round r identifiers
    rehash the round r-1 identifier with the sorted (bond order, neighbor
    round r-1 identifier) pairs.
    """
    n = len(mol)
    ids = [fnv1a_64(_encode_initial(atom_invariant(mol, i))) for i in range(n)]
    out = [(i, 0, ids[i]) for i in range(n)]
    for rnd in range(1, params.radius + 1):
        nxt = []
        for i in range(n):
            pairs = sorted((bond.order.value, ids[j]) for j, bond in mol.neighbors(i))
            nxt.append(fnv1a_64(_encode_round(ids[i], pairs)))
        ids = nxt
        out.extend((i, rnd, ids[i]) for i in range(n))
    return out


def morgan_fingerprint(mol: Molecule, params: FingerprintParams | None = None) -> MorganFingerprint:
    params = params or FingerprintParams()
    bits = frozenset(ident % params.nbits for _, _, ident in morgan_environments(mol, params))
    return MorganFingerprint(bits=bits, nbits=params.nbits, radius=params.radius)


def dice_similarity(a: MorganFingerprint, b: MorganFingerprint) -> float:
    """2·|A∩B| / (|A| + |B|), in [0, 1]."""
    if a.nbits != b.nbits or a.radius != b.radius:
        raise ParamMismatch(
            f"fingerprint params differ: ({a.nbits}, r{a.radius}) vs ({b.nbits}, r{b.radius})"
        )
    if not a.bits and not b.bits:
        raise DegenerateInput("both fingerprints are empty")
    return 2.0 * len(a.bits & b.bits) / (len(a.bits) + len(b.bits))
