"""Scoring: BLEU-2/4, ROUGE-1/2/L, Levenshtein, exact match, Morgan FTS, validity.

Caption metrics tokenize by whitespace on lowercased text; molecule metrics
work on raw characters (SMILES case is significant). Pairs whose calibration
failed score as empty predictions rather than being dropped, so failures
always push the scores the honest way.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from molrag.fingerprint import FingerprintParams, dice_similarity, morgan_fingerprint
from molrag.smiles import SmilesError, is_valid_smiles, molecules_equal, parse_smiles

BLEU_EPSILON = 1e-9

STATUS_OK = "ok"
STATUS_FAILED = "calibration_failed"


class MetricError(ValueError):
    pass


class EmptyInput(MetricError):
    pass


@dataclass(frozen=True)
class EvalPair:
    prediction: str
    reference: str
    status: str = STATUS_OK

    def __post_init__(self) -> None:
        if self.status not in (STATUS_OK, STATUS_FAILED):
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def effective_prediction(self) -> str:
        return "" if self.status == STATUS_FAILED else self.prediction


def _tokens(text: str, mode: str) -> list[str]:
    if mode == "caption":
        return text.lower().split()
    if mode == "smiles":
        return list(text)
    raise ValueError(f"unknown tokenization mode {mode!r}")


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_n(pairs: list[EvalPair], max_n: int, mode: str = "caption") -> float:
    """Corpus BLEU with uniform 1..max_n weights, brevity penalty and
    epsilon smoothing of zero n-gram matches."""
    if not pairs:
        raise EmptyInput("no pairs to score")
    if max_n not in (2, 4):
        raise ValueError("max_n must be 2 or 4")

    cand_total = 0
    ref_total = 0
    matches = [0] * max_n
    possible = [0] * max_n
    for pair in pairs:
        cand = _tokens(pair.effective_prediction, mode)
        ref = _tokens(pair.reference, mode)
        cand_total += len(cand)
        ref_total += len(ref)
        for n in range(1, max_n + 1):
            cgrams = _ngrams(cand, n)
            rgrams = _ngrams(ref, n)
            matches[n - 1] += sum(min(count, rgrams[gram]) for gram, count in cgrams.items())
            possible[n - 1] += max(len(cand) - n + 1, 0)

    if cand_total == 0:
        return 0.0
    log_sum = 0.0
    for n in range(max_n):
        p_n = matches[n] / possible[n] if matches[n] > 0 and possible[n] > 0 else BLEU_EPSILON
        log_sum += math.log(p_n) / max_n
    brevity = 1.0 if cand_total >= ref_total else math.exp(1.0 - ref_total / cand_total)
    return brevity * math.exp(log_sum)


def _overlap_f1(cand: Counter, ref: Counter, cand_n: int, ref_n: int) -> float:
    if cand_n == 0 or ref_n == 0:
        return 0.0
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    if overlap == 0:
        return 0.0
    precision = overlap / cand_n
    recall = overlap / ref_n
    return 2.0 * precision * recall / (precision + recall)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            curr.append(prev[j - 1] + 1 if x == y else max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def rouge_scores(pairs: list[EvalPair]) -> dict[str, float]:
    """Mean per-item F1 for unigram overlap, bigram overlap and LCS."""
    if not pairs:
        raise EmptyInput("no pairs to score")
    r1 = r2 = rl = 0.0
    for pair in pairs:
        cand = _tokens(pair.effective_prediction, "caption")
        ref = _tokens(pair.reference, "caption")
        r1 += _overlap_f1(_ngrams(cand, 1), _ngrams(ref, 1), len(cand), len(ref))
        c2 = max(len(cand) - 1, 0)
        f2 = max(len(ref) - 1, 0)
        r2 += _overlap_f1(_ngrams(cand, 2), _ngrams(ref, 2), c2, f2)
        lcs = _lcs_length(cand, ref)
        if lcs and cand and ref:
            precision = lcs / len(cand)
            recall = lcs / len(ref)
            rl += 2.0 * precision * recall / (precision + recall)
    count = len(pairs)
    return {"rouge1_f": r1 / count, "rouge2_f": r2 / count, "rougeL_f": rl / count}


def levenshtein(a: str, b: str) -> int:
    """Character edit distance with unit insert/delete/substitute costs."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        curr = [i]
        for j, y in enumerate(b, start=1):
            curr.append(min(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = curr
    return prev[-1]


def levenshtein_mean(pairs: list[EvalPair]) -> float:
    if not pairs:
        raise EmptyInput("no pairs to score")
    return sum(levenshtein(p.effective_prediction, p.reference) for p in pairs) / len(pairs)


def _parse_or_none(text: str):
    try:
        return parse_smiles(text)
    except SmilesError:
        return None


def exact_match_rate(pairs: list[EvalPair]) -> float:
    """Fraction of pairs whose molecules are graph-isomorphic; unparseable
    predictions count as non-matches."""
    if not pairs:
        return 0.0
    hits = 0
    for pair in pairs:
        pred = _parse_or_none(pair.effective_prediction)
        ref = _parse_or_none(pair.reference)
        if pred is not None and ref is not None and molecules_equal(pred, ref):
            hits += 1
    return hits / len(pairs)


def morgan_fts_stats(
    pairs: list[EvalPair], fp_params: FingerprintParams | None = None
) -> tuple[float, float, int]:
    """(mean over all pairs with unparseable counting 0, mean over parseable
    pairs only, parseable pair count)."""
    if not pairs:
        return 0.0, 0.0, 0
    fp_params = fp_params or FingerprintParams()
    total = 0.0
    valid_total = 0.0
    valid_count = 0
    for pair in pairs:
        pred = _parse_or_none(pair.effective_prediction)
        ref = _parse_or_none(pair.reference)
        if pred is None or ref is None:
            continue
        sim = dice_similarity(
            morgan_fingerprint(pred, fp_params), morgan_fingerprint(ref, fp_params)
        )
        total += sim
        valid_total += sim
        valid_count += 1
    mean_all = total / len(pairs)
    mean_valid = valid_total / valid_count if valid_count else 0.0
    return mean_all, mean_valid, valid_count


def morgan_fts_mean(pairs: list[EvalPair], fp_params: FingerprintParams | None = None) -> float:
    return morgan_fts_stats(pairs, fp_params)[0]


def validity_rate(pairs: list[EvalPair]) -> float:
    if not pairs:
        return 0.0
    return sum(1 for p in pairs if is_valid_smiles(p.effective_prediction)) / len(pairs)


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------

_RANGES = {"levenshtein": (0.0, math.inf)}
_NOT_COMPUTED = {
    "mol2cap": {"meteor": "n/a - out of scope", "text2mol": "n/a - out of scope"},
    "cap2mol": {
        "maccs_fts": "n/a - out of scope",
        "rdk_fts": "n/a - out of scope",
        "fcd": "n/a - out of scope",
        "text2mol": "n/a - out of scope",
    },
}

_TABLE_COLUMNS = {
    "mol2cap": [
        ("BLEU-2", "bleu2"),
        ("BLEU-4", "bleu4"),
        ("ROUGE-1", "rouge1"),
        ("ROUGE-2", "rouge2"),
        ("ROUGE-L", "rougeL"),
        ("METEOR", None),
        ("Text2Mol", None),
    ],
    "cap2mol": [
        ("BLEU-2", "bleu2"),
        ("BLEU-4", "bleu4"),
        ("EM", "exact_match"),
        ("Levenshtein", "levenshtein"),
        ("MACCS FTS", None),
        ("RDK FTS", None),
        ("Morgan FTS", "morgan_fts"),
        ("FCD", None),
        ("Text2Mol", None),
        ("Validity", "validity"),
    ],
}


def build_report(
    pairs: list[EvalPair],
    task: str,
    config: dict,
    fp_params: FingerprintParams | None = None,
) -> dict:
    """MetricReport as a plain JSON-ready dict; pure function of its inputs."""
    if task not in _TABLE_COLUMNS:
        raise ValueError(f"unknown task {task!r}")
    if not pairs:
        raise EmptyInput("no pairs to score")
    fp_params = fp_params or FingerprintParams()

    failed = sum(1 for p in pairs if p.status == STATUS_FAILED)
    metrics: dict[str, float] = {}
    counts = {"items": len(pairs), "calibration_failed": failed}

    if task == "mol2cap":
        metrics["bleu2"] = bleu_n(pairs, 2, mode="caption")
        metrics["bleu4"] = bleu_n(pairs, 4, mode="caption")
        rouge = rouge_scores(pairs)
        metrics["rouge1"] = rouge["rouge1_f"]
        metrics["rouge2"] = rouge["rouge2_f"]
        metrics["rougeL"] = rouge["rougeL_f"]
    else:
        metrics["bleu2"] = bleu_n(pairs, 2, mode="smiles")
        metrics["bleu4"] = bleu_n(pairs, 4, mode="smiles")
        metrics["levenshtein"] = levenshtein_mean(pairs)
        metrics["exact_match"] = exact_match_rate(pairs)
        mean_all, mean_valid, valid_count = morgan_fts_stats(pairs, fp_params)
        metrics["morgan_fts"] = mean_all
        metrics["morgan_fts_valid_only"] = mean_valid
        metrics["validity"] = validity_rate(pairs)
        counts["valid"] = sum(1 for p in pairs if is_valid_smiles(p.effective_prediction))
        counts["invalid"] = counts["items"] - counts["valid"]
        counts["parseable"] = valid_count

    for name, value in metrics.items():
        low, high = _RANGES.get(name, (0.0, 1.0))
        if not (low <= value <= high) or math.isnan(value):
            raise MetricError(f"{name} = {value} outside documented range")

    return {
        "task": task,
        "metrics": metrics,
        "not_computed": _NOT_COMPUTED[task],
        "counts": counts,
        "config": config,
        "fingerprint_params": {"radius": fp_params.radius, "nbits": fp_params.nbits},
    }


def render_table(report: dict) -> str:
    """Aligned-column text table mirroring the standard column ordering."""
    task = report["task"]
    headers = []
    values = []
    for title, key in _TABLE_COLUMNS[task]:
        headers.append(title)
        if key is None:
            values.append("n/a")
        elif key == "levenshtein":
            values.append(f"{report['metrics'][key]:.2f}")
        else:
            values.append(f"{report['metrics'][key]:.3f}")
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    body = "  ".join(v.ljust(w) for v, w in zip(values, widths))
    counts = report["counts"]
    lines = [
        f"task: {task}",
        head,
        "-" * len(head),
        body,
        "",
        f"items: {counts['items']}  calibration_failed: {counts['calibration_failed']}",
    ]
    if "valid" in counts:
        lines.append(f"valid: {counts['valid']}  invalid: {counts['invalid']}")
    return "\n".join(lines) + "\n"
