"""Command-line operator surface: ingest, query, evaluate, ablate, inspect-store.

Every run writes a manifest echoing the fully resolved configuration so the
experiment can be re-run identically. Evaluation checkpoints per item and
resumes from the checkpoint after an interruption. Reports contain no
timestamps: a run against the replay backend is bit-reproducible.

Configuration precedence: command-line flags > --config file > defaults.
"""

from __future__ import annotations

import json
import sys
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import click

from molrag import __version__, bm25
from molrag.calibration import (
    CalibrationFailure,
    CalibrationPolicy,
    calibrated_query,
    retrieve_examples,
)
from molrag.fingerprint import FingerprintParams
from molrag.llm import BackendConfig, ChatClient, ReplayBackend
from molrag.metrics import STATUS_FAILED, STATUS_OK, EvalPair, build_report, render_table
from molrag.prompt import PromptTemplate, default_template, load_template
from molrag.smiles import is_valid_smiles
from molrag.store import (
    RetrievalStrategy,
    Store,
    StoreError,
    build_store,
    load_chebi_tsv,
    load_store,
    save_store,
)

DEFAULT_GRID_SHOTS = (0, 1, 2, 5, 10)
DEFAULT_GRID_STRATEGIES = ("random", "bm25", "morgan_fts")

_STRATEGY_ALIASES = {
    "mol2cap": {"bm25": "bm25_smiles_chargram"},
    "cap2mol": {"bm25": "bm25_caption"},
}
_DEFAULT_STRATEGY = {"mol2cap": "morgan_fts", "cap2mol": "bm25_caption"}


_TASK_STRATEGIES = {
    "mol2cap": ("morgan_fts", "bm25_smiles_chargram", "random"),
    "cap2mol": ("bm25_caption", "random"),
}


def _resolve_strategy(task: str, name: str | None, seed: int | None) -> RetrievalStrategy:
    kind = name or _DEFAULT_STRATEGY[task]
    kind = _STRATEGY_ALIASES[task].get(kind, kind)
    if kind not in _TASK_STRATEGIES[task]:
        raise click.ClickException(f"strategy {kind!r} does not apply to task {task!r}")
    return RetrievalStrategy(kind=kind, seed=seed if kind == "random" else None)


@dataclass(frozen=True)
class RunConfig:
    store_path: str
    task: str
    n_shots: int
    strategy: RetrievalStrategy
    template_path: str | None
    out_path: str | None
    seed: int
    concurrency: int
    max_retries: int
    max_error_allowance: int
    replay_path: str | None
    backend: BackendConfig | None
    limit: int | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.n_shots <= 10:
            raise ValueError("n_shots must lie in 0..10")
        if self.replay_path is None and self.backend is None:
            raise ValueError("either a replay fixture or a backend config is required")


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise click.ClickException(f"cannot read config file {path}: {exc}")
    if not isinstance(data, dict):
        raise click.ClickException(f"config file {path} must hold a JSON object")
    return data


def _pick(flag, cfg: dict, key: str, default):
    if flag is not None:
        return flag
    if key in cfg:
        return cfg[key]
    return default


def _make_run_config(task, cfg_file, store, n_shots, strategy, seed, backend, replay,
                     template, out, concurrency, max_retries, allowance, limit) -> RunConfig:
    cfg = _load_config_file(cfg_file)
    task = _pick(task, cfg, "task", None)
    if task not in ("mol2cap", "cap2mol"):
        raise click.ClickException("--task must be mol2cap or cap2mol")
    backend_path = _pick(backend, cfg, "backend", None)
    backend_cfg = None
    if backend_path:
        backend_cfg = BackendConfig(**_load_config_file(backend_path))
    seed = _pick(seed, cfg, "seed", 0)
    try:
        return RunConfig(
            store_path=_pick(store, cfg, "store", None) or _fail("--store is required"),
            task=task,
            n_shots=_pick(n_shots, cfg, "n_shots", 2),
            strategy=_resolve_strategy(task, _pick(strategy, cfg, "strategy", None), seed),
            template_path=_pick(template, cfg, "template", None),
            out_path=_pick(out, cfg, "out", None),
            seed=seed,
            concurrency=_pick(concurrency, cfg, "concurrency", 4),
            max_retries=_pick(max_retries, cfg, "max_retries", 3),
            max_error_allowance=_pick(allowance, cfg, "max_error_allowance", 5),
            replay_path=_pick(replay, cfg, "replay", None),
            backend=backend_cfg,
            limit=_pick(limit, cfg, "limit", None),
        )
    except ValueError as exc:
        raise click.ClickException(str(exc))


def _fail(message: str):
    raise click.ClickException(message)


def _make_client(config: RunConfig) -> ChatClient:
    if config.replay_path:
        return ChatClient(
            ReplayBackend(config.replay_path),
            max_retries=config.max_retries,
            backoff_base=0.0,
            concurrency_limit=config.concurrency,
        )
    return ChatClient.for_config(config.backend, concurrency_limit=config.concurrency)


def _load_prompt_template(config: RunConfig) -> PromptTemplate:
    if config.template_path:
        return load_template(config.template_path, config.task)
    return default_template(config.task)


def _config_echo(config: RunConfig, store: Store, template: PromptTemplate) -> dict:
    return {
        "version": __version__,
        "task": config.task,
        "n_shots": config.n_shots,
        "strategy": {"kind": config.strategy.kind, "seed": config.strategy.seed},
        "seed": config.seed,
        "model": config.backend.model_name if config.backend else "replay",
        "backend_mode": "replay" if config.replay_path else "http",
        "calibration": {"max_error_allowance": config.max_error_allowance},
        "template": template.source,
        "concurrency": config.concurrency,
        "max_retries": config.max_retries,
        "limit": config.limit,
        "store": {
            "record_count": len(store),
            "split": store.split,
            "fingerprint_params": {
                "radius": store.fp_params.radius,
                "nbits": store.fp_params.nbits,
            },
            "bm25_params": {"k1": store.bm25_params.k1, "b": store.bm25_params.b},
        },
    }


def _dump_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


@click.group()
@click.version_option(version=__version__, prog_name="molrag")
def main() -> None:
    """Retrieval-augmented molecule-caption translation toolkit."""


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------


@main.command("ingest")
@click.argument("tsv_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_store", type=click.Path(file_okay=False))
@click.option("--radius", type=int, default=2, show_default=True)
@click.option("--nbits", type=int, default=2048, show_default=True)
@click.option("--k1", type=float, default=1.5, show_default=True)
@click.option("--b", "b_param", type=float, default=0.75, show_default=True)
@click.option("--split", default="train", show_default=True)
def cmd_ingest(tsv_path, out_store, radius, nbits, k1, b_param, split) -> None:
    """Load a molecule-caption TSV, build indices and persist the store."""
    try:
        records, report = load_chebi_tsv(tsv_path)
        store = build_store(
            records,
            FingerprintParams(radius=radius, nbits=nbits),
            bm25.Bm25Params(k1=k1, b=b_param),
            split=split,
        )
        save_store(store, out_store)
    except (StoreError, ValueError) as exc:
        raise click.ClickException(str(exc))
    click.echo(
        json.dumps(
            {
                "store": str(out_store),
                "rows": report.total_rows,
                "ingested": report.kept,
                "quarantined": [
                    {"line": q.line_number, "reason": q.reason} for q in report.quarantined
                ],
                "parse_success_rate": report.parse_success_rate,
            },
            indent=2,
            sort_keys=True,
        )
    )


# ---------------------------------------------------------------------------
# query
# ---------------------------------------------------------------------------

_SHARED_OPTIONS = [
    click.option("--store", type=click.Path(), default=None, help="Store directory."),
    click.option("--task", type=click.Choice(["mol2cap", "cap2mol"]), default=None),
    click.option("--n-shots", type=int, default=None),
    click.option(
        "--strategy",
        type=click.Choice(["morgan_fts", "bm25", "bm25_caption", "bm25_smiles_chargram", "random"]),
        default=None,
    ),
    click.option("--seed", type=int, default=None),
    click.option("--backend", type=click.Path(), default=None, help="Backend config JSON."),
    click.option("--replay", type=click.Path(), default=None, help="Replay fixture JSONL."),
    click.option("--template", type=click.Path(), default=None),
    click.option("--out", type=click.Path(), default=None),
    click.option("--concurrency", type=int, default=None),
    click.option("--max-retries", type=int, default=None),
    click.option("--max-error-allowance", "allowance", type=int, default=None),
    click.option("--config", "cfg_file", type=click.Path(), default=None),
]


def _shared_options(fn):
    for opt in reversed(_SHARED_OPTIONS):
        fn = opt(fn)
    return fn


@main.command("query")
@click.argument("user_input")
@_shared_options
def cmd_query(user_input, store, task, n_shots, strategy, seed, backend, replay, template,
              out, concurrency, max_retries, allowance, cfg_file) -> None:
    """Run one retrieval-prompt-calibrate round trip and print the result."""
    config = _make_run_config(task, cfg_file, store, n_shots, strategy, seed, backend,
                              replay, template, out, concurrency, max_retries, allowance, None)
    try:
        db = load_store(config.store_path)
    except StoreError as exc:
        raise click.ClickException(str(exc))
    tmpl = _load_prompt_template(config)
    client = _make_client(config)
    policy = CalibrationPolicy(max_error_allowance=config.max_error_allowance)

    examples_used: list[str] = []
    if config.n_shots > 0:
        try:
            examples_used = [
                rec.id
                for rec in retrieve_examples(
                    db, config.task, user_input, config.n_shots, config.strategy
                )
            ]
        except StoreError as exc:
            raise click.ClickException(str(exc))

    try:
        result = calibrated_query(
            client, db, tmpl, user_input, config.n_shots, policy, config.task, config.strategy
        )
    except CalibrationFailure as fail:
        transcript_path = Path(config.out_path or ".") / "calibration_failure.json"
        transcript_path.parent.mkdir(parents=True, exist_ok=True)
        _dump_json(
            transcript_path,
            {"attempts": fail.attempts, "last_raw_text": fail.last_raw_text},
        )
        click.echo(f"calibration failed; transcript at {transcript_path}", err=True)
        sys.exit(1)

    payload = {
        "input": user_input,
        "output": result.value,
        "examples_used": examples_used,
        "query_count": result.query_count,
        "final_shot_count": result.final_shot_count,
        "repairs_applied": list(result.repairs_applied),
        "strategy": config.strategy.kind,
    }
    if config.task == "cap2mol":
        payload["output_is_valid"] = is_valid_smiles(result.value)
    click.echo(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _process_item(index, record, config, db, tmpl, client, policy) -> dict:
    if config.task == "mol2cap":
        query, reference = record.smiles, record.caption
    else:
        query, reference = record.caption, record.smiles
    row = {
        "index": index,
        "id": record.id,
        "input": query,
        "reference": reference,
    }
    try:
        result = calibrated_query(
            client, db, tmpl, query, config.n_shots, policy, config.task, config.strategy
        )
        row.update(
            prediction=result.value,
            status=STATUS_OK,
            query_count=result.query_count,
            final_shot_count=result.final_shot_count,
            repairs_applied=list(result.repairs_applied),
        )
    except CalibrationFailure as fail:
        row.update(
            prediction="",
            status=STATUS_FAILED,
            query_count=config.max_error_allowance,
            final_shot_count=None,
            repairs_applied=[],
            attempts=fail.attempts,
            last_raw_text=fail.last_raw_text,
        )
    return row


def _read_checkpoint(path: Path) -> dict[int, dict]:
    done: dict[int, dict] = {}
    if path.exists():
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                row = json.loads(line)
                done[row["index"]] = row
    return done


def run_evaluation(config: RunConfig, test_tsv: str, out_dir: Path) -> dict:
    """Full pipeline over a test TSV; returns the report dict."""
    db = load_store(config.store_path)
    tmpl = _load_prompt_template(config)
    client = _make_client(config)
    policy = CalibrationPolicy(max_error_allowance=config.max_error_allowance)

    records, ingest_report = load_chebi_tsv(test_tsv)
    if config.limit:
        records = records[: config.limit]
    if not records:
        raise click.ClickException(f"no usable rows in {test_tsv}")

    out_dir.mkdir(parents=True, exist_ok=True)
    echo = _config_echo(config, db, tmpl)
    manifest = dict(echo)
    manifest.update(
        test_file=str(test_tsv),
        store_path=str(config.store_path),
        items=len(records),
        quarantined_rows=len(ingest_report.quarantined),
    )
    _dump_json(out_dir / "manifest.json", manifest)

    items_path = out_dir / "items.jsonl"
    done = _read_checkpoint(items_path)
    todo = [i for i in range(len(records)) if i not in done]

    write_lock = threading.Lock()
    with open(items_path, "a", encoding="utf-8") as sink:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            futures = {
                pool.submit(
                    _process_item, i, records[i], config, db, tmpl, client, policy
                ): i
                for i in todo
            }
            for future in as_completed(futures):
                row = future.result()
                with write_lock:
                    sink.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")
                    sink.flush()
                done[row["index"]] = row

    rows = [done[i] for i in sorted(done) if i < len(records)]
    with open(items_path, "w", encoding="utf-8") as sink:
        for row in rows:
            sink.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")
    with open(out_dir / "failures.jsonl", "w", encoding="utf-8") as sink:
        for row in rows:
            if row["status"] == STATUS_FAILED:
                sink.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")

    pairs = [
        EvalPair(prediction=row["prediction"], reference=row["reference"], status=row["status"])
        for row in rows
    ]
    report = build_report(pairs, config.task, echo, db.fp_params)
    _dump_json(out_dir / "report.json", report)
    (out_dir / "report.txt").write_text(render_table(report), encoding="utf-8")
    return report


@main.command("evaluate")
@click.argument("test_tsv", type=click.Path(exists=True, dir_okay=False))
@click.option("--limit", type=int, default=None, help="Evaluate only the first N items.")
@_shared_options
def cmd_evaluate(test_tsv, limit, store, task, n_shots, strategy, seed, backend, replay,
                 template, out, concurrency, max_retries, allowance, cfg_file) -> None:
    """Evaluate the pipeline on a test split and write metric reports."""
    config = _make_run_config(task, cfg_file, store, n_shots, strategy, seed, backend,
                              replay, template, out, concurrency, max_retries, allowance, limit)
    out_dir = Path(config.out_path or "molrag-eval")
    try:
        report = run_evaluation(config, test_tsv, out_dir)
    except StoreError as exc:
        raise click.ClickException(str(exc))
    click.echo(render_table(report))
    click.echo(f"reports written to {out_dir}")


# ---------------------------------------------------------------------------
# ablate
# ---------------------------------------------------------------------------


@main.command("ablate")
@click.argument("test_tsv", type=click.Path(exists=True, dir_okay=False))
@click.option("--grid-shots", default=",".join(str(n) for n in DEFAULT_GRID_SHOTS),
              show_default=True, help="Comma-separated n-shot values.")
@click.option("--grid-strategies", default=",".join(DEFAULT_GRID_STRATEGIES),
              show_default=True, help="Comma-separated strategy names.")
@click.option("--limit", type=int, default=None)
@_shared_options
def cmd_ablate(test_tsv, grid_shots, grid_strategies, limit, store, task, n_shots, strategy,
               seed, backend, replay, template, out, concurrency, max_retries, allowance,
               cfg_file) -> None:
    """Run the n-shot x strategy grid and write a consolidated comparison."""
    base = _make_run_config(task, cfg_file, store, n_shots, strategy, seed, backend,
                            replay, template, out, concurrency, max_retries, allowance, limit)
    try:
        shots = [int(x) for x in grid_shots.split(",") if x.strip() != ""]
        strategies = [x.strip() for x in grid_strategies.split(",") if x.strip()]
    except ValueError as exc:
        raise click.ClickException(f"bad grid spec: {exc}")

    out_dir = Path(base.out_path or "molrag-ablation")
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = []
    for n, strat_name in product(shots, strategies):
        cell_dir = out_dir / f"cell_{base.task}_n{n}_{strat_name}"
        report_path = cell_dir / "report.json"
        if report_path.exists():
            report = json.loads(report_path.read_text(encoding="utf-8"))
        else:
            cell_cfg = RunConfig(
                store_path=base.store_path,
                task=base.task,
                n_shots=n,
                strategy=_resolve_strategy(base.task, strat_name, base.seed),
                template_path=base.template_path,
                out_path=str(cell_dir),
                seed=base.seed,
                concurrency=base.concurrency,
                max_retries=base.max_retries,
                max_error_allowance=base.max_error_allowance,
                replay_path=base.replay_path,
                backend=base.backend,
                limit=base.limit,
            )
            report = run_evaluation(cell_cfg, test_tsv, cell_dir)
        cells.append({"n_shots": n, "strategy": strat_name, "report": report})

    comparison = {
        "task": base.task,
        "grid": {"n_shots": shots, "strategies": strategies},
        "cells": [
            {
                "n_shots": cell["n_shots"],
                "strategy": cell["strategy"],
                "metrics": cell["report"]["metrics"],
                "counts": cell["report"]["counts"],
            }
            for cell in cells
        ],
    }
    _dump_json(out_dir / "comparison.json", comparison)
    (out_dir / "comparison.txt").write_text(_comparison_table(comparison), encoding="utf-8")
    click.echo(_comparison_table(comparison))
    click.echo(f"ablation written to {out_dir}")


def _comparison_table(comparison: dict) -> str:
    cells = comparison["cells"]
    metric_names = sorted(cells[0]["metrics"]) if cells else []
    header = ["method"] + metric_names
    rows = []
    for cell in sorted(cells, key=lambda c: (c["n_shots"], c["strategy"])):
        label = f"{cell['n_shots']}-shot ({cell['strategy']})"
        rows.append([label] + [f"{cell['metrics'][m]:.3f}" for m in metric_names])
    widths = [max(len(header[c]), *(len(r[c]) for r in rows)) for c in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("-" * len(lines[0]))
    for row in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# inspect-store
# ---------------------------------------------------------------------------


@main.command("inspect-store")
@click.option("--store", "store_path", type=click.Path(exists=True), required=True)
def cmd_inspect_store(store_path) -> None:
    """Print a persisted store's manifest and basic statistics."""
    try:
        db = load_store(store_path)
    except StoreError as exc:
        raise click.ClickException(str(exc))
    payload = {
        "record_count": len(db),
        "split": db.split,
        "fingerprint_params": {"radius": db.fp_params.radius, "nbits": db.fp_params.nbits},
        "bm25_params": {"k1": db.bm25_params.k1, "b": db.bm25_params.b},
        "caption_vocabulary": len(db.caption_index.postings),
        "smiles_trigram_vocabulary": len(db.smiles_index.postings),
        "mean_caption_tokens": db.caption_index.avgdl,
    }
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
