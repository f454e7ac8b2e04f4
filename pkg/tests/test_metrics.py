import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molrag.fingerprint import FingerprintParams, dice_similarity, morgan_fingerprint
from molrag.metrics import (
    STATUS_FAILED,
    EmptyInput,
    EvalPair,
    bleu_n,
    build_report,
    exact_match_rate,
    levenshtein,
    levenshtein_mean,
    morgan_fts_mean,
    morgan_fts_stats,
    render_table,
    rouge_scores,
    validity_rate,
)
from molrag.smiles import parse_smiles
from oracles import bleu_direct, levenshtein_direct

# --- hand-worked worksheet -------------------------------------------------
# caption pairs: unigram matches 6+3+3+0+0 = 12 of 6+3+4+0+4 = 17 positions;
# bigram matches 5+2+1+0+0 = 8 of 5+2+3+0+3 = 13; trigram 4+1+0 = 5 of 9;
# 4-gram 3+0+0 = 3 of 5; candidate length 17, reference length 25.
CAPTION_PAIRS = [
    ("the cat sat on the mat", "the cat sat on the mat"),
    ("the cat sat", "the cat sat on the mat"),
    ("a dog ran fast", "the dog ran very fast"),
    ("", "empty prediction here"),
    ("completely different words here", "nothing matches at all now"),
]
HAND_BLEU2 = math.exp(1 - 25 / 17) * math.sqrt((12 / 17) * (8 / 13))
HAND_BLEU4 = math.exp(1 - 25 / 17) * math.exp(
    (math.log(12 / 17) + math.log(8 / 13) + math.log(5 / 9) + math.log(3 / 5)) / 4
)
# per-pair ROUGE F1 (pairs 4 and 5 contribute 0):
#   pair 1: 1, 1, 1;  pair 2: 2/3, 4/7, 2/3;  pair 3: 2/3, 2/7, 2/3
HAND_ROUGE1 = (1 + 2 / 3 + 2 / 3) / 5
HAND_ROUGE2 = (1 + 4 / 7 + 2 / 7) / 5
HAND_ROUGEL = (1 + 2 / 3 + 2 / 3) / 5

SMILES_PAIRS = [
    ("CCO", "CCO"),
    ("CCO", "CC(=O)O"),
    ("c1ccccc1", "C1CCCCC1"),
    ("", "CCCC"),
    ("CC(C)O", "CCCO"),
]
# frozen from the direct-counting oracle (tests/oracles.py)
ORACLE_SMILES_BLEU2 = 0.28691766312673045
ORACLE_SMILES_BLEU4 = 0.0013929616460552137
HAND_LEV = [0, 4, 6, 4, 2]  # per-pair character edits, mean 3.2


def pairs(raw) -> list[EvalPair]:
    return [EvalPair(prediction=p, reference=r) for p, r in raw]


class TestBleu:
    def test_identical_corpus(self):
        assert bleu_n(pairs([("a b c d", "a b c d")] * 3), 2) == pytest.approx(1.0)
        assert bleu_n(pairs([("a b c d", "a b c d")] * 3), 4) == pytest.approx(1.0)
        smiles = "CC(=O)Oc1ccccc1C(=O)O"
        assert bleu_n(pairs([(smiles, smiles)]), 4, mode="smiles") == pytest.approx(1.0)

    def test_disjoint_epsilon_floor(self):
        score = bleu_n(pairs([("x y z w", "a b c d")]), 2)
        assert 0.0 <= score < 1e-4

    def test_caption_worksheet_values(self):
        assert bleu_n(pairs(CAPTION_PAIRS), 2) == pytest.approx(HAND_BLEU2, abs=1e-6)
        assert bleu_n(pairs(CAPTION_PAIRS), 4) == pytest.approx(HAND_BLEU4, abs=1e-6)

    def test_smiles_oracle_values(self):
        assert bleu_n(pairs(SMILES_PAIRS), 2, mode="smiles") == pytest.approx(
            ORACLE_SMILES_BLEU2, abs=1e-6
        )
        assert bleu_n(pairs(SMILES_PAIRS), 4, mode="smiles") == pytest.approx(
            ORACLE_SMILES_BLEU4, abs=1e-6
        )

    def test_matches_direct_oracle_live(self):
        cap_tokens = [(c.lower().split(), r.lower().split()) for c, r in CAPTION_PAIRS]
        assert bleu_n(pairs(CAPTION_PAIRS), 2) == pytest.approx(bleu_direct(cap_tokens, 2))
        smi_tokens = [(list(c), list(r)) for c, r in SMILES_PAIRS]
        assert bleu_n(pairs(SMILES_PAIRS), 4, mode="smiles") == pytest.approx(
            bleu_direct(smi_tokens, 4)
        )

    def test_case_folding_for_captions(self):
        assert bleu_n(pairs([("The CAT", "the cat")]), 2) == pytest.approx(1.0)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            bleu_n([], 2)

    def test_all_empty_predictions(self):
        assert bleu_n(pairs([("", "a b")]), 2) == 0.0


class TestRouge:
    def test_identical(self):
        scores = rouge_scores(pairs([("a b c", "a b c")]))
        assert scores == {"rouge1_f": 1.0, "rouge2_f": 1.0, "rougeL_f": 1.0}

    def test_empty_prediction(self):
        scores = rouge_scores(pairs([("", "a b c")]))
        assert scores == {"rouge1_f": 0.0, "rouge2_f": 0.0, "rougeL_f": 0.0}

    def test_worksheet_values(self):
        scores = rouge_scores(pairs(CAPTION_PAIRS))
        assert scores["rouge1_f"] == pytest.approx(HAND_ROUGE1, abs=1e-6)
        assert scores["rouge2_f"] == pytest.approx(HAND_ROUGE2, abs=1e-6)
        assert scores["rougeL_f"] == pytest.approx(HAND_ROUGEL, abs=1e-6)

    def test_lcs_worked_example(self):
        # cand "the cat sat", ref "the cat sat on the mat": LCS 3 -> F1 = 2/3
        scores = rouge_scores(pairs([("the cat sat", "the cat sat on the mat")]))
        assert scores["rougeL_f"] == pytest.approx(2 / 3)

    def test_lcs_order_sensitivity(self):
        scores = rouge_scores(pairs([("c b a", "a b c")]))
        # only one common subsequence element survives the reversal
        assert scores["rougeL_f"] == pytest.approx(1 / 3)
        assert scores["rouge1_f"] == pytest.approx(1.0)


class TestLevenshtein:
    def test_identical(self):
        assert levenshtein("same", "same") == 0

    def test_kitten_sitting(self):
        assert levenshtein("kitten", "sitting") == 3

    def test_empty_prediction_costs_reference_length(self):
        assert levenshtein("", "CCCC") == 4

    def test_worksheet_values(self):
        for (pred, ref), expected in zip(SMILES_PAIRS, HAND_LEV):
            assert levenshtein(pred, ref) == expected
        assert levenshtein_mean(pairs(SMILES_PAIRS)) == pytest.approx(3.2)

    @settings(max_examples=150, deadline=None)
    @given(st.text(max_size=20), st.text(max_size=20))
    def test_matches_full_table_oracle(self, a, b):
        assert levenshtein(a, b) == levenshtein_direct(a, b)


class TestExactMatch:
    def test_graph_level_match(self):
        assert exact_match_rate(pairs([("OCC", "CCO")])) == 1.0

    def test_invalid_prediction_no_match(self):
        assert exact_match_rate(pairs([("C1CC", "CCO")])) == 0.0

    def test_twenty_pair_hand_count(self):
        # 7 graph matches out of 20 by construction
        match = [("CCO", "OCC"), ("CCC", "CCC"), ("c1ccccc1", "c1ccccc1"),
                 ("C(C)C", "CCC"), ("N[C@@H](C)C(=O)O", "N[C@H](C)C(=O)O"),
                 ("[Na+].[Cl-]", "[Cl-].[Na+]"), ("C%12CCCC%12", "C1CCCC1")]
        differ = [("CCO", "CCN"), ("CC", "CCC"), ("C=C", "CC"), ("C#C", "C=C"),
                  ("c1ccccc1", "C1CCCCC1"), ("CCO", "CCCO"), ("CC(=O)O", "CCO"),
                  ("C1CC1", "CCC"), ("O", "N"), ("CCOC", "CCCO"), ("CN", "CO"),
                  ("bad(", "CCO"), ("", "CC")]
        rate = exact_match_rate(pairs(match + differ))
        assert rate == pytest.approx(7 / 20)


class TestMorganFts:
    def test_exact_matches_score_one(self):
        assert morgan_fts_mean(pairs([("CCO", "OCC"), ("CC", "CC")])) == pytest.approx(1.0)

    def test_all_invalid_zero(self):
        assert morgan_fts_mean(pairs([("nope(", "CCO"), ("", "CC")])) == 0.0

    def test_cross_check_per_pair_dice(self):
        raw = [("CCO", "CCCO"), ("CC", "CCC"), ("c1ccccc1", "Cc1ccccc1"), ("xx", "CC")]
        params = FingerprintParams()
        expected_sum = 0.0
        for pred, ref in raw[:3]:
            expected_sum += dice_similarity(
                morgan_fingerprint(parse_smiles(pred), params),
                morgan_fingerprint(parse_smiles(ref), params),
            )
        mean_all, mean_valid, n_valid = morgan_fts_stats(pairs(raw), params)
        assert mean_all == pytest.approx(expected_sum / 4)
        assert mean_valid == pytest.approx(expected_sum / 3)
        assert n_valid == 3


class TestValidity:
    def test_rates(self):
        assert validity_rate(pairs([("CCO", ""), ("C1CC", ""), ("C(C)(C)(C)(C)C", "")])) == (
            pytest.approx(1 / 3)
        )

    def test_exact_match_implies_fts_and_validity(self):
        exact = pairs([("OCC", "CCO"), ("C(C)C", "CCC"), ("C%12CCCC%12", "C1CCCC1")])
        assert exact_match_rate(exact) == 1.0
        assert morgan_fts_mean(exact) == pytest.approx(1.0)
        assert validity_rate(exact) == 1.0


class TestFailureAccounting:
    def test_failed_pairs_score_as_empty(self):
        ok = EvalPair(prediction="CCO", reference="CCO")
        failed = EvalPair(prediction="CCO", reference="CCO", status=STATUS_FAILED)
        assert failed.effective_prediction == ""
        assert exact_match_rate([ok]) == 1.0
        assert exact_match_rate([failed]) == 0.0

    def test_monotone_penalty(self):
        base_raw = [(r.capitalize(), r) for r in ("the cat sat", "a dog ran", "birds fly high")]
        base = pairs(base_raw)
        degraded = [
            EvalPair(prediction=p.prediction, reference=p.reference,
                     status=STATUS_FAILED if i == 0 else p.status)
            for i, p in enumerate(base)
        ]
        assert bleu_n(degraded, 2) <= bleu_n(base, 2)
        assert rouge_scores(degraded)["rouge1_f"] <= rouge_scores(base)["rouge1_f"]
        assert levenshtein_mean(degraded) >= levenshtein_mean(base)

        smi = pairs([("CCO", "CCO"), ("CC", "CC")])
        smi_degraded = [smi[0], EvalPair("CC", "CC", status=STATUS_FAILED)]
        assert exact_match_rate(smi_degraded) <= exact_match_rate(smi)
        assert morgan_fts_mean(smi_degraded) <= morgan_fts_mean(smi)
        assert validity_rate(smi_degraded) <= validity_rate(smi)


class TestRanges:
    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.tuples(st.text(max_size=15), st.text(min_size=1, max_size=15)),
            min_size=1,
            max_size=5,
        )
    )
    def test_fuzz_ranges(self, raw):
        ps = pairs(raw)
        for value in (
            bleu_n(ps, 2),
            bleu_n(ps, 4),
            *rouge_scores(ps).values(),
            exact_match_rate(ps),
            morgan_fts_mean(ps),
            validity_rate(ps),
        ):
            assert 0.0 <= value <= 1.0
        assert levenshtein_mean(ps) >= 0.0


class TestReport:
    def test_structure_and_na_fields(self):
        report = build_report(pairs(SMILES_PAIRS), "cap2mol", {"n_shots": 2})
        assert set(report["metrics"]) == {
            "bleu2", "bleu4", "levenshtein", "exact_match",
            "morgan_fts", "morgan_fts_valid_only", "validity",
        }
        assert report["not_computed"]["fcd"].startswith("n/a")
        assert report["counts"]["items"] == 5
        assert report["config"] == {"n_shots": 2}

    def test_mol2cap_columns(self):
        report = build_report(pairs(CAPTION_PAIRS), "mol2cap", {})
        assert set(report["metrics"]) == {"bleu2", "bleu4", "rouge1", "rouge2", "rougeL"}
        assert "meteor" in report["not_computed"]

    def test_deterministic(self):
        a = build_report(pairs(SMILES_PAIRS), "cap2mol", {"seed": 1})
        b = build_report(pairs(SMILES_PAIRS), "cap2mol", {"seed": 1})
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_table_rendering(self):
        report = build_report(pairs(SMILES_PAIRS), "cap2mol", {})
        table = render_table(report)
        for column in ("BLEU-2", "EM", "Levenshtein", "Morgan FTS", "Validity", "FCD"):
            assert column in table
        assert "n/a" in table

        cap_table = render_table(build_report(pairs(CAPTION_PAIRS), "mol2cap", {}))
        for column in ("ROUGE-1", "ROUGE-L", "METEOR", "Text2Mol"):
            assert column in cap_table

    def test_empty_pairs_rejected(self):
        with pytest.raises(EmptyInput):
            build_report([], "cap2mol", {})
