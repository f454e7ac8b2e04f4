import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molrag.calibration import (
    STRATEGY_PATTERN,
    CalibratedOutput,
    CalibrationFailure,
    CalibrationPolicy,
    FormatError,
    calibrated_query,
    extract_payload,
)
from molrag.llm import BackendError, ChatClient, ScriptedBackend
from molrag.prompt import default_template
from molrag.smiles import is_valid_smiles
from molrag.store import RetrievalStrategy

GOOD_CAPTION = '{"caption": "A molecule description."}'
GARBAGE = "Apologies, that request falls outside what may be described."


def make_client(script) -> ChatClient:
    return ChatClient(ScriptedBackend(script), max_retries=3, backoff_base=0.0, sleep=lambda s: None)


def run(script, n, store=None, policy=None, task="mol2cap"):
    strategy = RetrievalStrategy("morgan_fts") if task == "mol2cap" else RetrievalStrategy("bm25_caption")
    return calibrated_query(
        make_client(script),
        store,
        default_template(task),
        "CCO" if task == "mol2cap" else "An alcohol caption.",
        n,
        policy or CalibrationPolicy(),
        task,
        strategy if n > 0 else None,
    )


class TestPolicy:
    def test_defaults(self):
        policy = CalibrationPolicy()
        assert policy.max_error_allowance == 5
        assert len(policy.correction_strategies) == 4

    def test_validation(self):
        with pytest.raises(ValueError):
            CalibrationPolicy(max_error_allowance=0)
        with pytest.raises(ValueError):
            CalibrationPolicy(correction_strategies=())
        with pytest.raises(ValueError):
            CalibrationPolicy(correction_strategies=("telepathy",))


class TestExtraction:
    def test_fifteen_response_fixture(self, data_dir):
        fixture = json.loads((data_dir / "chatty_responses.json").read_text())
        assert len(fixture) == 15
        for case in fixture:
            if case.get("expect_error"):
                with pytest.raises(FormatError):
                    extract_payload(case["text"], case["task"])
                continue
            result = extract_payload(case["text"], case["task"])
            assert result.strategy == case["expect_strategy"], case["text"]
            assert result.value == case["expect_value"], case["text"]

    def test_strategy_order_respected(self):
        # text both embedded-parseable and pattern-parseable: embedded wins
        text = 'Note {"molecule": "CCO"} and also CC(=O)O appears.'
        assert extract_payload(text, "cap2mol").strategy == "embedded_json"

    def test_strategy_subset(self):
        chatty = 'Sure: {"caption": "x"}'
        with pytest.raises(FormatError):
            extract_payload(chatty, "mol2cap", ("strict_json",))
        assert extract_payload(chatty, "mol2cap", ("strict_json", "embedded_json")).value == "x"

    def test_pure_function(self):
        text = "Caption: something stable"
        assert extract_payload(text, "mol2cap") == extract_payload(text, "mol2cap")

    def test_format_error_carries_raw_text(self):
        with pytest.raises(FormatError) as err:
            extract_payload(GARBAGE, "mol2cap")
        assert err.value.raw_text == GARBAGE

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=120))
    def test_cap2mol_pattern_soundness(self, text):
        # whatever the fallback extracts must be a valid molecule
        try:
            result = extract_payload(text, "cap2mol")
        except FormatError:
            return
        if result.strategy == STRATEGY_PATTERN:
            assert is_valid_smiles(result.value)


class TestLoop:
    def test_success_first_try(self, corpus_store):
        out = run([GOOD_CAPTION], n=2, store=corpus_store)
        assert isinstance(out, CalibratedOutput)
        assert out.query_count == 1
        assert out.final_shot_count == 2
        assert out.repairs_applied == ()

    def test_two_length_errors_then_success(self, corpus_store):
        out = run(
            ["context_length_exceeded", "context_length_exceeded", GOOD_CAPTION],
            n=5,
            store=corpus_store,
        )
        assert out.final_shot_count == 3  # n - 2 per the eviction rule
        assert out.query_count <= CalibrationPolicy().max_error_allowance

    def test_perpetual_garbage_exhausts_allowance(self, corpus_store):
        client = make_client([GARBAGE])
        backend = client.backend
        with pytest.raises(CalibrationFailure) as err:
            calibrated_query(
                client,
                corpus_store,
                default_template("mol2cap"),
                "CCO",
                2,
                CalibrationPolicy(),
                "mol2cap",
                RetrievalStrategy("morgan_fts"),
            )
        assert backend.calls == CalibrationPolicy().max_error_allowance
        assert err.value.last_raw_text == GARBAGE
        assert len(err.value.attempts) == 5

    def test_format_error_then_success_consumes_allowance(self, corpus_store):
        out = run([GARBAGE, GOOD_CAPTION], n=1, store=corpus_store)
        assert out.query_count == 2
        assert out.final_shot_count == 1

    def test_repairs_recorded(self, corpus_store):
        out = run(["Caption: something adequate"], n=1, store=corpus_store)
        assert out.repairs_applied == (STRATEGY_PATTERN,)
        strict = run([GOOD_CAPTION], n=1, store=corpus_store)
        assert strict.repairs_applied == ()

    def test_zero_shot_without_store(self):
        out = run([GOOD_CAPTION], n=0)
        assert out.final_shot_count == 0
        assert out.query_count == 1

    def test_length_error_at_zero_examples_fails(self):
        with pytest.raises(CalibrationFailure):
            run(["context_length_exceeded"], n=0)

    def test_termination_bound(self, corpus_store):
        # endless length errors: one charged query, n evictions, then failure
        n = 3
        client = make_client(["context_length_exceeded"])
        backend = client.backend
        with pytest.raises(CalibrationFailure):
            calibrated_query(
                client,
                corpus_store,
                default_template("mol2cap"),
                "CCO",
                n,
                CalibrationPolicy(),
                "mol2cap",
                RetrievalStrategy("morgan_fts"),
            )
        assert backend.calls <= CalibrationPolicy().max_error_allowance + n

    def test_monotone_eviction(self, corpus_store):
        # shot count never increases across the transcript
        out = run(
            ["context_length_exceeded", GARBAGE, "context_length_exceeded", GOOD_CAPTION],
            n=4,
            store=corpus_store,
        )
        shots = [entry["shot_count"] for entry in out.transcript]
        assert shots == sorted(shots, reverse=True)
        assert out.final_shot_count == 2

    def test_auth_error_propagates(self, corpus_store):
        with pytest.raises(BackendError) as err:
            run(["auth"], n=1, store=corpus_store)
        assert err.value.kind == "auth"

    def test_server_exhaustion_is_item_failure(self, corpus_store):
        with pytest.raises(CalibrationFailure):
            run(["server"], n=1, store=corpus_store)

    def test_requires_store_for_shots(self):
        with pytest.raises(ValueError):
            run([GOOD_CAPTION], n=2, store=None)
