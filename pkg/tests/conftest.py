import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from molrag.store import build_store, load_chebi_tsv

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def corpus_records():
    records, report = load_chebi_tsv(DATA_DIR / "corpus.tsv")
    assert not report.quarantined
    return records


@pytest.fixture(scope="session")
def corpus_store(corpus_records):
    return build_store(corpus_records)


@pytest.fixture(scope="session")
def test_records():
    records, report = load_chebi_tsv(DATA_DIR / "test_items.tsv")
    assert not report.quarantined
    return records
