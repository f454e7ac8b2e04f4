"""Molecular graph data model shared by the SMILES parser, writer and metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator


class SmilesError(ValueError):
    """Base class for all SMILES parsing errors."""


class UnmatchedRingClosure(SmilesError):
    """Ring bond digit opened but never closed, closed onto itself, or duplicated."""


class UnbalancedParenthesis(SmilesError):
    """Branch parenthesis without a matching partner or without a parent atom."""


class UnknownToken(SmilesError):
    """Character outside the supported grammar, or a dangling bond symbol."""


class EmptyBranch(SmilesError):
    """Branch parentheses enclosing no atom."""


class InvalidBracketAtom(SmilesError):
    """Malformed bracket-atom expression."""


class BondOrder(Enum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    QUADRUPLE = 4
    AROMATIC = 5

    @property
    def valence(self) -> int:
        """Contribution to an atom's computed valence (aromatic counts 1 per bond)."""
        if self is BondOrder.AROMATIC:
            return 1
        return self.value


# The 118 IUPAC element symbols plus the wildcard.
ELEMENTS = frozenset(
    """H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni
    Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe
    Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg
    Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg
    Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og""".split()
)

WILDCARD = "*"

# Elements eligible for the lowercase aromatic form.
AROMATIC_ELIGIBLE = frozenset({"B", "C", "N", "O", "P", "S", "Se", "As"})

# Atoms writable outside brackets, and their standard maximum valence.
ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
MAX_VALENCE = {
    "B": 3,
    "C": 4,
    "N": 3,
    "O": 2,
    "P": 5,
    "S": 6,
    "F": 1,
    "Cl": 1,
    "Br": 1,
    "I": 1,
}


@dataclass(frozen=True)
class Atom:
    """One atom of a molecular graph.

    ``explicit_h_count`` is only ever set for bracket atoms; implicit hydrogens
    are never materialised as graph atoms.
    """

    element: str
    aromatic: bool = False
    formal_charge: int = 0
    isotope: int | None = None
    explicit_h_count: int | None = None
    bracket: bool = False

    def __post_init__(self) -> None:
        if self.element != WILDCARD and self.element not in ELEMENTS:
            raise ValueError(f"unknown element symbol {self.element!r}")
        if self.aromatic and self.element not in AROMATIC_ELIGIBLE:
            raise ValueError(f"element {self.element!r} cannot be aromatic")
        if self.isotope is not None and self.isotope < 0:
            raise ValueError("isotope must be non-negative")
        if self.explicit_h_count is not None and self.explicit_h_count < 0:
            raise ValueError("explicit hydrogen count must be non-negative")


@dataclass(frozen=True)
class Bond:
    """An undirected edge between two atom indices.

    The stereo marker (``/`` or ``\\``) is retained verbatim but plays no role
    in canonical ranking, fingerprints or equality.
    """

    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE
    stereo_marker: str | None = None

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError("bond endpoints must be distinct")
        if self.stereo_marker not in (None, "/", "\\"):
            raise ValueError(f"bad stereo marker {self.stereo_marker!r}")

    @property
    def key(self) -> tuple[int, int]:
        """Unordered endpoint pair, normalised low-high."""
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)

    def other(self, idx: int) -> int:
        if idx == self.a:
            return self.b
        if idx == self.b:
            return self.a
        raise ValueError(f"atom {idx} is not an endpoint of this bond")


@dataclass(frozen=True)
class Molecule:
    """Immutable molecular graph: atoms, bonds and the text it came from.

    Disconnected components (dot-separated SMILES) are permitted. The parser
    guarantees there are no self-loops and no duplicate edges.
    """

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    source_text: str = ""
    _adjacency: tuple[tuple[int, ...], ...] = field(
        init=False, repr=False, compare=False, default=()
    )

    def __post_init__(self) -> None:
        n = len(self.atoms)
        seen: set[tuple[int, int]] = set()
        adj: list[list[int]] = [[] for _ in range(n)]
        for bi, bond in enumerate(self.bonds):
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise ValueError(f"bond endpoint out of range: {bond}")
            if bond.key in seen:
                raise ValueError(f"duplicate bond between atoms {bond.key}")
            seen.add(bond.key)
            adj[bond.a].append(bi)
            adj[bond.b].append(bi)
        object.__setattr__(self, "_adjacency", tuple(tuple(x) for x in adj))

    def __len__(self) -> int:
        return len(self.atoms)

    def bonds_at(self, idx: int) -> tuple[Bond, ...]:
        """All bonds incident to atom ``idx``."""
        return tuple(self.bonds[bi] for bi in self._adjacency[idx])

    def neighbors(self, idx: int) -> Iterator[tuple[int, Bond]]:
        """Yield (neighbor index, bond) pairs for atom ``idx``."""
        for bi in self._adjacency[idx]:
            bond = self.bonds[bi]
            yield bond.other(idx), bond

    def degree(self, idx: int) -> int:
        return len(self._adjacency[idx])
