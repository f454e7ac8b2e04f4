"""SMILES parsing, serialization, canonical ranking and validity."""

from molrag.smiles.canon import canonical_rank, invariant_sequence, molecules_equal
from molrag.smiles.model import (
    Atom,
    Bond,
    BondOrder,
    EmptyBranch,
    InvalidBracketAtom,
    Molecule,
    SmilesError,
    UnbalancedParenthesis,
    UnknownToken,
    UnmatchedRingClosure,
)
from molrag.smiles.parser import parse_smiles
from molrag.smiles.validity import is_valid_smiles
from molrag.smiles.writer import write_smiles

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "EmptyBranch",
    "InvalidBracketAtom",
    "Molecule",
    "SmilesError",
    "UnbalancedParenthesis",
    "UnknownToken",
    "UnmatchedRingClosure",
    "canonical_rank",
    "invariant_sequence",
    "is_valid_smiles",
    "molecules_equal",
    "parse_smiles",
    "write_smiles",
]
