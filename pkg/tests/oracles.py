"""Independent brute-force oracles.

Everything here recomputes results from first principles, without touching
the production code paths it checks (inverted indices, refinement classes,
incremental hashing). Expected values frozen into tests were produced by
these oracles.
"""

from __future__ import annotations

import math
from collections import Counter

from molrag.smiles.model import Molecule


# ---------------------------------------------------------------------------
# Graph isomorphism by plain backtracking (no refinement): atoms may map
# wherever raw attributes agree; bonds must match order-for-order.
# ---------------------------------------------------------------------------


def _attrs(mol: Molecule, i: int):
    a = mol.atoms[i]
    return (a.element, a.aromatic, a.formal_charge, a.isotope, a.explicit_h_count)


def _bond_map(mol: Molecule) -> dict[tuple[int, int], int]:
    return {bond.key: bond.order.value for bond in mol.bonds}


def brute_force_isomorphic(a: Molecule, b: Molecule) -> bool:
    n = len(a)
    if n != len(b) or len(a.bonds) != len(b.bonds):
        return False
    bonds_a, bonds_b = _bond_map(a), _bond_map(b)
    mapping = [-1] * n
    used = [False] * n

    def extend(i: int) -> bool:
        if i == n:
            return True
        for j in range(n):
            if used[j] or _attrs(a, i) != _attrs(b, j):
                continue
            consistent = True
            for k in range(i):
                key_a = (k, i) if k < i else (i, k)
                jk = mapping[k]
                key_b = (jk, j) if jk < j else (j, jk)
                if bonds_a.get(key_a) != bonds_b.get(key_b):
                    consistent = False
                    break
            if not consistent:
                continue
            mapping[i] = j
            used[j] = True
            if extend(i + 1):
                return True
            mapping[i] = -1
            used[j] = False
        return False

    return extend(0)


# ---------------------------------------------------------------------------
# Rooted-neighborhood signatures: the uncompressed structural counterpart of
# the hashed Morgan environment identifiers.
# ---------------------------------------------------------------------------


def _local_tuple(mol: Molecule, i: int):
    a = mol.atoms[i]
    return (
        a.element,
        a.aromatic,
        a.formal_charge,
        -1 if a.isotope is None else a.isotope,
        -1 if a.explicit_h_count is None else a.explicit_h_count,
        mol.degree(i),
    )


def environment_signature(mol: Molecule, idx: int, radius: int):
    """Canonical nested structure of the BFS tree rooted at an atom."""
    if radius == 0:
        return _local_tuple(mol, idx)
    inner = environment_signature(mol, idx, radius - 1)
    subs = tuple(
        sorted(
            (bond.order.value, environment_signature(mol, j, radius - 1))
            for j, bond in mol.neighbors(idx)
        )
    )
    return (inner, subs)


def all_environment_signatures(mol: Molecule, radius: int):
    """(atom, round, signature) for every atom and round, mirroring the shape
    of the production environment list."""
    out = []
    for r in range(radius + 1):
        for i in range(len(mol)):
            out.append((i, r, environment_signature(mol, i, r)))
    return out


# ---------------------------------------------------------------------------
# BM25 by direct evaluation (no inverted index, no cached idf).
# ---------------------------------------------------------------------------


def bm25_score_direct(
    docs_tokens: list[list[str]],
    query_tokens: list[str],
    doc_idx: int,
    k1: float = 1.5,
    b: float = 0.75,
) -> float:
    n_docs = len(docs_tokens)
    doc = docs_tokens[doc_idx]
    avgdl = sum(len(d) for d in docs_tokens) / n_docs
    total = 0.0
    for term in query_tokens:
        df = sum(1 for d in docs_tokens if term in d)
        if df == 0:
            continue
        tf = doc.count(term)
        if tf == 0:
            continue
        idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
        total += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len(doc) / avgdl))
    return total


def bm25_rank_direct(docs_tokens, query_tokens, k1=1.5, b=0.75):
    scores = [
        bm25_score_direct(docs_tokens, query_tokens, i, k1, b) for i in range(len(docs_tokens))
    ]
    return sorted(range(len(docs_tokens)), key=lambda i: (-scores[i], i)), scores


# ---------------------------------------------------------------------------
# Text metrics recomputed by direct counting.
# ---------------------------------------------------------------------------


def ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_direct(pairs_tokens: list[tuple[list[str], list[str]]], max_n: int) -> float:
    eps = 1e-9
    cand_len = sum(len(c) for c, _ in pairs_tokens)
    ref_len = sum(len(r) for _, r in pairs_tokens)
    if cand_len == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        matched = 0
        possible = 0
        for cand, ref in pairs_tokens:
            cgrams = ngram_counts(cand, n)
            rgrams = ngram_counts(ref, n)
            matched += sum(min(c, rgrams[g]) for g, c in cgrams.items())
            possible += max(len(cand) - n + 1, 0)
        p_n = matched / possible if matched > 0 and possible > 0 else eps
        log_sum += math.log(p_n) / max_n
    bp = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * math.exp(log_sum)


def f1_direct(overlap: int, cand_n: int, ref_n: int) -> float:
    if overlap == 0 or cand_n == 0 or ref_n == 0:
        return 0.0
    p = overlap / cand_n
    r = overlap / ref_n
    return 2 * p * r / (p + r)


def lcs_direct(a: list[str], b: list[str]) -> int:
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[-1][-1]


def levenshtein_direct(a: str, b: str) -> int:
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        table[i][0] = i
    for j in range(len(b) + 1):
        table[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return table[-1][-1]
