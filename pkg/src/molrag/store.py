"""Molecule-caption example database: ingest, indexing, retrieval, persistence.

Ingest reads the ChEBI-20 TSV layout (header ``CID<TAB>SMILES<TAB>description``),
quarantining rather than failing on malformed rows. The built store holds one
BM25 index over captions, one over SMILES character 3-grams, and a Morgan
fingerprint per record, and serves top-n context examples per retrieval
strategy with the query's own pair excluded.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path

from molrag import bm25
from molrag.fingerprint import (
    FingerprintParams,
    MorganFingerprint,
    dice_similarity,
    morgan_fingerprint,
)
from molrag.smiles import Molecule, SmilesError, molecules_equal, parse_smiles

STORE_FORMAT_VERSION = 1
_REQUIRED_COLUMNS = ("CID", "SMILES", "description")


class StoreError(Exception):
    pass


class IoFailure(StoreError):
    pass


class EmptyFile(StoreError):
    pass


class MissingColumn(StoreError):
    pass


class EmptyStore(StoreError):
    pass


class ParseFailure(StoreError):
    """Query SMILES did not parse."""


class StoreIntegrityError(StoreError):
    """Persisted store failed checksum or manifest validation."""


STRATEGY_KINDS = ("morgan_fts", "bm25_caption", "bm25_smiles_chargram", "random")


@dataclass(frozen=True)
class RetrievalStrategy:
    kind: str
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "random" and self.seed is None:
            raise ValueError("random strategy requires a seed")


@dataclass(frozen=True)
class MoleculeRecord:
    id: str
    smiles: str
    caption: str
    fingerprint: MorganFingerprint | None = None


@dataclass(frozen=True)
class QuarantinedRow:
    line_number: int
    reason: str
    content: str


@dataclass(frozen=True)
class IngestReport:
    total_rows: int
    kept: int
    quarantined: tuple[QuarantinedRow, ...]

    @property
    def parse_success_rate(self) -> float:
        return self.kept / self.total_rows if self.total_rows else 0.0


def load_chebi_tsv(path) -> tuple[list[MoleculeRecord], IngestReport]:
    """Read a molecule-caption TSV; malformed rows are quarantined, not fatal."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise EmptyFile(f"{path} has no header row")

    header = lines[0].split("\t")
    missing = [col for col in _REQUIRED_COLUMNS if col not in header]
    if missing:
        raise MissingColumn(f"{path} lacks column(s): {', '.join(missing)}")
    cid_idx = header.index("CID")
    smi_idx = header.index("SMILES")
    desc_idx = header.index("description")
    desc_last = desc_idx == len(header) - 1

    records: list[MoleculeRecord] = []
    quarantined: list[QuarantinedRow] = []
    total = 0
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        total += 1
        parts = line.split("\t")
        if len(parts) < len(header):
            quarantined.append(QuarantinedRow(line_no, "too few columns", line))
            continue
        cid = parts[cid_idx].strip()
        smiles = parts[smi_idx].strip()
        caption = "\t".join(parts[desc_idx:]) if desc_last else parts[desc_idx]
        caption = caption.strip()
        if not caption:
            quarantined.append(QuarantinedRow(line_no, "empty caption", line))
            continue
        try:
            parse_smiles(smiles)
        except SmilesError as exc:
            quarantined.append(QuarantinedRow(line_no, f"{type(exc).__name__}: {exc}", line))
            continue
        records.append(MoleculeRecord(id=cid, smiles=smiles, caption=caption))
    report = IngestReport(total_rows=total, kept=len(records), quarantined=tuple(quarantined))
    return records, report


class Store:
    """Immutable retrieval database over molecule-caption records."""

    def __init__(
        self,
        records: list[MoleculeRecord],
        fp_params: FingerprintParams,
        bm25_params: bm25.Bm25Params,
        caption_index: bm25.Bm25Index,
        smiles_index: bm25.Bm25Index,
        split: str = "train",
    ) -> None:
        self.records = records
        self.fp_params = fp_params
        self.bm25_params = bm25_params
        self.caption_index = caption_index
        self.smiles_index = smiles_index
        self.split = split
        self._mol_cache: dict[int, Molecule] = {}

    def __len__(self) -> int:
        return len(self.records)

    def molecule(self, pos: int) -> Molecule:
        if pos not in self._mol_cache:
            self._mol_cache[pos] = parse_smiles(self.records[pos].smiles)
        return self._mol_cache[pos]


def build_store(
    records: list[MoleculeRecord],
    fp_params: FingerprintParams | None = None,
    bm25_params: bm25.Bm25Params | None = None,
    split: str = "train",
) -> Store:
    """Precompute fingerprints and both BM25 indices over the records."""
    if not records:
        raise EmptyStore("no records to build a store from")
    fp_params = fp_params or FingerprintParams()
    bm25_params = bm25_params or bm25.Bm25Params()

    enriched = []
    for rec in records:
        if rec.fingerprint is not None and rec.fingerprint.nbits == fp_params.nbits:
            enriched.append(rec)
            continue
        fp = morgan_fingerprint(parse_smiles(rec.smiles), fp_params)
        enriched.append(dataclasses.replace(rec, fingerprint=fp))

    caption_index = bm25.build_index(
        [rec.caption for rec in enriched], bm25_params, tokenizer_mode="caption"
    )
    smiles_index = bm25.build_index(
        [rec.smiles for rec in enriched], bm25_params, tokenizer_mode="smiles_chargram"
    )
    return Store(enriched, fp_params, bm25_params, caption_index, smiles_index, split=split)


def _graph_excluder(store: Store, query_smiles: str):
    """Self-exclusion test for Mol2Cap: same graph as the query.

    Fingerprint equality gates the (expensive) isomorphism check; isomorphic
    molecules always share a fingerprint, so no equal record slips through.
    """
    try:
        query_mol = parse_smiles(query_smiles)
    except SmilesError as exc:
        raise ParseFailure(f"query SMILES does not parse: {exc}") from exc
    query_fp = morgan_fingerprint(query_mol, store.fp_params)

    def excluded(pos: int) -> bool:
        rec_fp = store.records[pos].fingerprint
        if rec_fp is None or rec_fp.bits != query_fp.bits:
            return False
        return molecules_equal(query_mol, store.molecule(pos))

    return query_mol, query_fp, excluded


def _collect(order, excluded, n: int, records) -> list[MoleculeRecord]:
    out = []
    for pos in order:
        if excluded(pos):
            continue
        out.append(records[pos])
        if len(out) == n:
            break
    return out


def retrieve_mol2cap(
    store: Store, query_smiles: str, n: int, strategy: RetrievalStrategy
) -> list[MoleculeRecord]:
    """Top-n context examples for molecule captioning.

    morgan_fts ranks by Dice similarity of Morgan fingerprints (ties by record
    position); bm25_smiles_chargram ranks by character 3-gram BM25; random
    draws without replacement from a seeded generator. A record whose graph
    equals the query is never returned.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not store.records:
        raise EmptyStore("store holds no records")
    _, query_fp, excluded = _graph_excluder(store, query_smiles)

    if strategy.kind == "morgan_fts":
        scored = sorted(
            range(len(store.records)),
            key=lambda pos: (-dice_similarity(query_fp, store.records[pos].fingerprint), pos),
        )
        return _collect(scored, excluded, n, store.records)
    if strategy.kind == "bm25_smiles_chargram":
        ranked = bm25.top_n(store.smiles_index, query_smiles, len(store.records))
        return _collect((pos for pos, _ in ranked), excluded, n, store.records)
    if strategy.kind == "random":
        rng = random.Random(strategy.seed)
        order = rng.sample(range(len(store.records)), len(store.records))
        return _collect(order, excluded, n, store.records)
    raise ValueError(f"strategy {strategy.kind!r} does not apply to Mol2Cap retrieval")


def retrieve_cap2mol(
    store: Store, query_caption: str, n: int, strategy: RetrievalStrategy
) -> list[MoleculeRecord]:
    """Top-n context examples for text-based molecule generation.

    bm25_caption ranks by caption BM25; random draws from a seeded generator.
    A record whose caption equals the query string exactly is never returned.
    When no query term is indexed, the lowest-position records fill the list
    with score zero (documented degenerate behavior).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not store.records:
        raise EmptyStore("store holds no records")

    def excluded(pos: int) -> bool:
        return store.records[pos].caption == query_caption

    if strategy.kind == "bm25_caption":
        ranked = bm25.top_n(store.caption_index, query_caption, len(store.records))
        return _collect((pos for pos, _ in ranked), excluded, n, store.records)
    if strategy.kind == "random":
        rng = random.Random(strategy.seed)
        order = rng.sample(range(len(store.records)), len(store.records))
        return _collect(order, excluded, n, store.records)
    raise ValueError(f"strategy {strategy.kind!r} does not apply to Cap2Mol retrieval")


# ---------------------------------------------------------------------------
# Persistence: a store directory with manifest, records TSV, fingerprint file
# and the two BM25 index files. Checksums are verified on load.
# ---------------------------------------------------------------------------

_RECORDS_FILE = "records.tsv"
_FP_FILE = "fingerprints.jsonl"
_CAPTION_INDEX_FILE = "captions.bm25"
_SMILES_INDEX_FILE = "smiles.bm25"
_MANIFEST_FILE = "manifest.json"


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def save_store(store: Store, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    records_path = directory / _RECORDS_FILE
    with open(records_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("CID\tSMILES\tdescription\n")
        for rec in store.records:
            fh.write(f"{rec.id}\t{rec.smiles}\t{rec.caption}\n")

    fp_path = directory / _FP_FILE
    with open(fp_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            json.dumps(
                {"radius": store.fp_params.radius, "nbits": store.fp_params.nbits},
                sort_keys=True,
            )
            + "\n"
        )
        for rec in store.records:
            fh.write(rec.fingerprint.to_hex() + "\n")

    bm25.save_index(store.caption_index, directory / _CAPTION_INDEX_FILE)
    bm25.save_index(store.smiles_index, directory / _SMILES_INDEX_FILE)

    manifest = {
        "format_version": STORE_FORMAT_VERSION,
        "record_count": len(store.records),
        "split": store.split,
        "fingerprint_params": {"radius": store.fp_params.radius, "nbits": store.fp_params.nbits},
        "bm25_params": {"k1": store.bm25_params.k1, "b": store.bm25_params.b},
        "checksums": {
            name: _sha256(directory / name)
            for name in (_RECORDS_FILE, _FP_FILE, _CAPTION_INDEX_FILE, _SMILES_INDEX_FILE)
        },
    }
    with open(directory / _MANIFEST_FILE, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_store(directory) -> Store:
    directory = Path(directory)
    manifest_path = directory / _MANIFEST_FILE
    if not manifest_path.exists():
        raise IoFailure(f"no store manifest at {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise StoreIntegrityError(f"unreadable manifest: {exc}") from exc
    if manifest.get("format_version") != STORE_FORMAT_VERSION:
        raise StoreIntegrityError(
            f"unsupported store format version {manifest.get('format_version')!r}"
        )

    for name, expected in manifest["checksums"].items():
        actual = _sha256(directory / name)
        if actual != expected:
            raise StoreIntegrityError(f"checksum mismatch for {name}")

    fpp = manifest["fingerprint_params"]
    fp_params = FingerprintParams(radius=fpp["radius"], nbits=fpp["nbits"])
    bp = manifest["bm25_params"]
    bm25_params = bm25.Bm25Params(k1=bp["k1"], b=bp["b"])

    rows = (directory / _RECORDS_FILE).read_text(encoding="utf-8").splitlines()
    fp_lines = (directory / _FP_FILE).read_text(encoding="utf-8").splitlines()
    fp_header = json.loads(fp_lines[0])
    if fp_header != {"radius": fp_params.radius, "nbits": fp_params.nbits}:
        raise StoreIntegrityError("fingerprint file params disagree with manifest")

    records: list[MoleculeRecord] = []
    for row, hex_line in zip(rows[1:], fp_lines[1:]):
        cid, smiles, caption = row.split("\t", 2)
        fp = MorganFingerprint.from_hex(hex_line, fp_params.nbits, fp_params.radius)
        records.append(MoleculeRecord(id=cid, smiles=smiles, caption=caption, fingerprint=fp))
    if len(records) != manifest["record_count"]:
        raise StoreIntegrityError("record count does not match manifest")

    caption_index = bm25.load_index(directory / _CAPTION_INDEX_FILE)
    smiles_index = bm25.load_index(directory / _SMILES_INDEX_FILE)
    return Store(
        records, fp_params, bm25_params, caption_index, smiles_index, split=manifest["split"]
    )
