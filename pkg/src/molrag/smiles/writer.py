"""Deterministic SMILES serialization.

Output is produced by a depth-first traversal starting from the atom ranked
first by :func:`~molrag.smiles.canon.canonical_rank`, visiting neighbors in
rank order, with ring closures numbered in traversal order. The result
re-parses to a graph isomorphic to the input. Stereo markers are not emitted
(they carry no graph semantics here).
"""

from __future__ import annotations

from molrag.smiles.canon import canonical_rank
from molrag.smiles.model import (
    ORGANIC_SUBSET,
    WILDCARD,
    Atom,
    Bond,
    BondOrder,
    Molecule,
)

_AROMATIC_BARE = frozenset({"B", "C", "N", "O", "P", "S"})


def write_smiles(mol: Molecule) -> str:
    """Serialize a molecule to SMILES; the empty molecule yields ''."""
    if len(mol) == 0:
        return ""
    ranks = canonical_rank(mol)

    visited: set[int] = set()
    fragments: list[str] = []
    for start in sorted(range(len(mol)), key=lambda i: ranks[i]):
        if start in visited:
            continue
        fragments.append(_write_component(mol, ranks, start, visited))
    return ".".join(fragments)


def _write_component(mol: Molecule, ranks: list[int], start: int, visited: set[int]) -> str:
    children, ring_bonds = _spanning_tree(mol, ranks, start, visited)

    ring_at: dict[int, list[Bond]] = {}
    for bond in ring_bonds:
        ring_at.setdefault(bond.a, []).append(bond)
        ring_at.setdefault(bond.b, []).append(bond)

    digit_of: dict[tuple[int, int], int] = {}
    free_digits = list(range(99, 0, -1))  # pop() yields the smallest

    def ring_text(u: int) -> str:
        parts = []
        incident = sorted(
            ring_at.get(u, ()),
            key=lambda b: (b.key not in digit_of, digit_of.get(b.key, ranks[b.other(u)])),
        )
        for bond in incident:
            if bond.key in digit_of:
                digit = digit_of.pop(bond.key)
                free_digits.append(digit)
                free_digits.sort(reverse=True)
                parts.append(_digit_text(digit))
            else:
                digit = free_digits.pop()
                digit_of[bond.key] = digit
                parts.append(_bond_text(mol, bond) + _digit_text(digit))
        return "".join(parts)

    out: list[str] = []
    work: list[tuple[str, ...]] = [("atom", str(start), "")]
    while work:
        op = work.pop()
        if op[0] == "lit":
            out.append(op[1])
            continue
        u = int(op[1])
        out.append(op[2] + _atom_text(mol.atoms[u]) + ring_text(u))
        kids = children.get(u, ())
        pending: list[tuple[str, ...]] = []
        for i, (v, bond) in enumerate(kids):
            btxt = _bond_text(mol, bond)
            if i < len(kids) - 1:
                pending.append(("lit", "("))
                pending.append(("atom", str(v), btxt))
                pending.append(("lit", ")"))
            else:
                pending.append(("atom", str(v), btxt))
        work.extend(reversed(pending))
    return "".join(out)


def _spanning_tree(
    mol: Molecule, ranks: list[int], start: int, visited: set[int]
) -> tuple[dict[int, list[tuple[int, Bond]]], list[Bond]]:
    children: dict[int, list[tuple[int, Bond]]] = {}
    ring_bonds: list[Bond] = []
    ring_keys: set[tuple[int, int]] = set()
    tree_keys: set[tuple[int, int]] = set()

    def sorted_nbrs(u: int):
        return iter(sorted(mol.neighbors(u), key=lambda vb: ranks[vb[0]]))

    visited.add(start)
    stack = [(start, sorted_nbrs(start))]
    while stack:
        u, it = stack[-1]
        for v, bond in it:
            if bond.key in tree_keys or bond.key in ring_keys:
                continue
            if v in visited:
                ring_keys.add(bond.key)
                ring_bonds.append(bond)
                continue
            visited.add(v)
            tree_keys.add(bond.key)
            children.setdefault(u, []).append((v, bond))
            stack.append((v, sorted_nbrs(v)))
            break
        else:
            stack.pop()
    return children, ring_bonds


def _bond_text(mol: Molecule, bond: Bond) -> str:
    both_aromatic = mol.atoms[bond.a].aromatic and mol.atoms[bond.b].aromatic
    if bond.order is BondOrder.SINGLE:
        return "-" if both_aromatic else ""
    if bond.order is BondOrder.AROMATIC:
        return "" if both_aromatic else ":"
    return {BondOrder.DOUBLE: "=", BondOrder.TRIPLE: "#", BondOrder.QUADRUPLE: "$"}[bond.order]


def _digit_text(digit: int) -> str:
    return str(digit) if digit < 10 else f"%{digit:02d}"


def _atom_text(atom: Atom) -> str:
    bare_ok = atom.element == WILDCARD or (
        atom.element in ORGANIC_SUBSET
        and (not atom.aromatic or atom.element in _AROMATIC_BARE)
    )
    needs_bracket = (
        not bare_ok
        or atom.isotope is not None
        or atom.formal_charge != 0
        or atom.explicit_h_count is not None
    )
    symbol = atom.element.lower() if atom.aromatic else atom.element
    if not needs_bracket:
        return symbol

    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(symbol)
    if atom.explicit_h_count is not None:
        parts.append("H" if atom.explicit_h_count == 1 else f"H{atom.explicit_h_count}")
    charge = atom.formal_charge
    if charge > 0:
        parts.append("+" if charge == 1 else f"+{charge}")
    elif charge < 0:
        parts.append("-" if charge == -1 else f"-{-charge}")
    parts.append("]")
    return "".join(parts)
