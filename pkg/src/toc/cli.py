"""Command-line entry points.

Exit codes: 0 success, 1 config/corpus/run errors with a diagnostic,
2 usage errors (bad flags, handled by click).
"""

from __future__ import annotations

import dataclasses
import json
import sys
import time
from pathlib import Path

import click

from .agents import AgentSuite
from .audit import AuditReplayError, AuditTrail, load_trail, verify_against_result
from .config import RunConfig, RunConfigError, load_run_config
from .corpus import CorpusFormatError, generate_synthetic, load_corpus, save_corpus
from .harness import derive_seed, reward_curve, run_ablation, run_sensitivity
from .harness import ABLATION_VARIANTS
from .reward import RewardScorer
from .search import GatingPolicy, SearchEngine
from .server import ReviewServer


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _search_overrides(seed, sigma_max, alpha, delta, t_max, epsilon,
                      stall_window, n_fail, mode) -> dict:
    search = {}
    if sigma_max is not None:
        search["sigma_max_epi"] = sigma_max
    if alpha is not None:
        search["alpha"] = alpha
    if delta is not None:
        search["delta"] = delta
    if t_max is not None:
        search["t_max"] = t_max
    if epsilon is not None:
        search["epsilon"] = epsilon
    if stall_window is not None:
        search["stall_window"] = stall_window
    if n_fail is not None:
        search["n_fail"] = n_fail
    if mode is not None:
        search["sim_mode"] = mode
    overrides = {}
    if search:
        overrides["search"] = search
    if seed is not None:
        overrides["seed"] = seed
    return overrides


def _build_config(config_path, corpus, backend, out_dir, port=None,
                  delay=None, **search_flags) -> RunConfig:
    overrides = _search_overrides(**search_flags)
    if corpus is not None:
        overrides["corpus"] = corpus
    if backend is not None:
        overrides.setdefault("backend", {})["kind"] = backend
    if out_dir is not None:
        overrides["out_dir"] = out_dir
    if port is not None:
        overrides["port"] = port
    if delay is not None:
        overrides["iteration_delay_secs"] = delay
    try:
        return load_run_config(config_path, overrides)
    except RunConfigError as exc:
        _fail(str(exc))


def _load_records(cfg: RunConfig):
    if not cfg.corpus:
        _fail("no corpus given; pass --corpus or set it in the config file")
    try:
        return load_corpus(cfg.corpus)
    except (CorpusFormatError, OSError) as exc:
        _fail(f"cannot load corpus: {exc}")


def _record_paths(out: Path, record_id: str, multi: bool) -> "tuple[Path, Path]":
    base = out / record_id if multi else out
    base.mkdir(parents=True, exist_ok=True)
    return base / "audit.jsonl", base / "curve.csv"


def _run_record(cfg: RunConfig, record, audit_path: Path):
    record_seed = derive_seed(cfg.seed, record.record_id)
    suite = AgentSuite(dataclasses.replace(cfg.backend, seed=record_seed))
    search_cfg = dataclasses.replace(cfg.search, seed=record_seed)
    trail = AuditTrail(audit_path)
    engine = SearchEngine(record.claim, list(record.prior_art),
                          cfg=search_cfg, suite=suite,
                          scorer=RewardScorer(weights=cfg.weights),
                          trail=trail,
                          iteration_delay_secs=cfg.iteration_delay_secs)
    try:
        result = engine.run()
    finally:
        trail.close()
    return record_seed, engine, result


def _write_result(out: Path, cfg: RunConfig, entries: "list[dict]") -> Path:
    payload = {"config": cfg.echo(), "records": entries}
    path = out / "result.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


_COMMON_SEARCH_FLAGS = [
    click.option("--seed", type=int, default=None, help="Base random seed."),
    click.option("--sigma-max", type=float, default=None,
                 help="Epistemic uncertainty gate threshold."),
    click.option("--alpha", type=float, default=None,
                 help="Progressive widening coefficient."),
    click.option("--delta", type=float, default=None,
                 help="Progressive widening exponent."),
    click.option("--t-max", type=int, default=None,
                 help="Iteration budget."),
    click.option("--epsilon", type=float, default=None,
                 help="Stall detection threshold on best-reward change."),
    click.option("--stall-window", type=int, default=None,
                 help="Consecutive sub-epsilon iterations before stalling out."),
    click.option("--n-fail", type=int, default=None,
                 help="Consecutive failed iterations before giving up."),
    click.option("--mode", type=click.Choice(["entropy", "confidence", "hybrid"]),
                 default=None, help="Rollout step-selection policy."),
]


def _with_search_flags(fn):
    for flag in reversed(_COMMON_SEARCH_FLAGS):
        fn = flag(fn)
    return fn


@click.group()
def main():
    """Search-based claim optimizer with a human review loop."""


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file.")
@click.option("--corpus", type=click.Path(), default=None)
@click.option("--backend", type=click.Choice(["mock", "remote"]), default=None)
@click.option("--out-dir", type=click.Path(), default=None)
@_with_search_flags
def run(config_path, corpus, backend, out_dir, **search_flags):
    """Optimize every record in the corpus; write result.json,
    audit.jsonl, and curve.csv into the output directory."""
    cfg = _build_config(config_path, corpus, backend, out_dir, **search_flags)
    records = _load_records(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    multi = len(records) > 1
    entries = []
    failures = 0
    for record in records:
        audit_path, curve_path = _record_paths(out, record.record_id, multi)
        try:
            record_seed, engine, result = _run_record(cfg, record, audit_path)
        except Exception as exc:
            failures += 1
            click.echo(f"record {record.record_id}: failed "
                       f"({type(exc).__name__}: {exc})", err=True)
            entries.append({"record_id": record.record_id, "error": str(exc)})
            continue
        curve_path.write_text(reward_curve(result.reward_trace),
                              encoding="utf-8")
        entries.append({
            "record_id": record.record_id,
            "seed": record_seed,
            "artifacts": {
                "audit": str(audit_path.relative_to(out)),
                "curve": str(curve_path.relative_to(out)),
            },
            "result": result.to_dict(),
        })
        click.echo(f"record {record.record_id}: best_reward="
                   f"{result.best_reward:.4f} reason={result.termination_reason} "
                   f"nodes={result.node_count}")
    path = _write_result(out, cfg, entries)
    click.echo(f"wrote {path}")
    sys.exit(1 if failures else 0)


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--corpus", type=click.Path(), default=None)
@click.option("--backend", type=click.Choice(["mock", "remote"]), default=None)
@click.option("--out-dir", type=click.Path(), default=None)
@click.option("--variants", default=",".join(ABLATION_VARIANTS),
              help="Comma-separated variant list; must include full.")
@_with_search_flags
def ablate(config_path, corpus, backend, out_dir, variants, **search_flags):
    """Run the module ablation grid and write ablation.csv."""
    cfg = _build_config(config_path, corpus, backend, out_dir, **search_flags)
    records = _load_records(cfg)
    names = tuple(v.strip() for v in variants.split(",") if v.strip())
    try:
        report = run_ablation(records, names, base_cfg=cfg.search,
                              backend=cfg.backend, weights=cfg.weights,
                              seed=cfg.seed)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "ablation.csv"
    path.write_text(report.csv_text, encoding="utf-8")
    click.echo(f"wrote {path} ({len(report.rows)} rows)")


def _parse_axis(raw: str, kind, name: str):
    try:
        values = [kind(v.strip()) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise click.UsageError(f"--{name} expects comma-separated values")
    if not values:
        raise click.UsageError(f"--{name} needs at least one value")
    return values


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--corpus", type=click.Path(), default=None)
@click.option("--backend", type=click.Choice(["mock", "remote"]), default=None)
@click.option("--out-dir", type=click.Path(), default=None)
@click.option("--sigma-max", "sigma_axis", default="0.1,0.2,1.0",
              help="Comma-separated gate thresholds.")
@click.option("--alpha", "alpha_axis", default="2.0",
              help="Comma-separated widening coefficients.")
@click.option("--t-max", "t_max_axis", default=None,
              help="Comma-separated iteration budgets.")
@click.option("--seed", type=int, default=None)
def sweep(config_path, corpus, backend, out_dir, sigma_axis, alpha_axis,
          t_max_axis, seed):
    """Run the sensitivity grid and write sensitivity.csv."""
    cfg = _build_config(config_path, corpus, backend, out_dir, seed=seed,
                        sigma_max=None, alpha=None, delta=None, t_max=None,
                        epsilon=None, stall_window=None, n_fail=None,
                        mode=None)
    records = _load_records(cfg)
    sigma_values = _parse_axis(sigma_axis, float, "sigma-max")
    alpha_values = _parse_axis(alpha_axis, float, "alpha")
    if t_max_axis is None:
        t_max_values = [cfg.search.t_max]
    else:
        t_max_values = _parse_axis(t_max_axis, int, "t-max")
    report = run_sensitivity(records, sigma_values, alpha_values, t_max_values,
                             base_cfg=cfg.search, backend=cfg.backend,
                             weights=cfg.weights, seed=cfg.seed)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sensitivity.csv"
    path.write_text(report.csv_text, encoding="utf-8")
    click.echo(f"wrote {path} ({len(report.rows)} rows)")


@main.command("gen-corpus")
@click.option("--seed", type=int, default=0)
@click.option("--n", "count", type=int, default=10)
@click.option("--mode", type=click.Choice(["general", "oracle", "borderline"]),
              default="general")
@click.option("--out", type=click.Path(), default="corpus.json")
def gen_corpus(seed, count, mode, out):
    """Generate a synthetic labeled corpus (deterministic per seed)."""
    try:
        records = generate_synthetic(count, seed=seed, mode=mode)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    path = Path(out)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    save_corpus(records, path)
    click.echo(f"wrote {path} ({len(records)} records)")


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--corpus", type=click.Path(), default=None)
@click.option("--backend", type=click.Choice(["mock", "remote"]), default=None)
@click.option("--out-dir", type=click.Path(), default=None)
@click.option("--port", type=int, default=None)
@click.option("--delay", type=float, default=None,
              help="Seconds to sleep per iteration so reviewers can keep up.")
@_with_search_flags
def serve(config_path, corpus, backend, out_dir, port, delay, **search_flags):
    """Run the first corpus record with flagging enabled and serve the
    review API; keeps serving the final state after the run ends."""
    cfg = _build_config(config_path, corpus, backend, out_dir, port=port,
                        delay=delay, **search_flags)
    records = _load_records(cfg)
    record = records[0]
    if len(records) > 1:
        click.echo(f"corpus has {len(records)} records; serving the first "
                   f"({record.record_id})", err=True)
    cfg = dataclasses.replace(cfg, search=dataclasses.replace(
        cfg.search, gating_policy=GatingPolicy.FLAG_FOR_HUMAN))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    record_seed = derive_seed(cfg.seed, record.record_id)
    suite = AgentSuite(dataclasses.replace(cfg.backend, seed=record_seed))
    trail = AuditTrail(out / "audit.jsonl")
    engine = SearchEngine(record.claim, list(record.prior_art),
                          cfg=dataclasses.replace(cfg.search, seed=record_seed),
                          suite=suite,
                          scorer=RewardScorer(weights=cfg.weights),
                          trail=trail,
                          iteration_delay_secs=cfg.iteration_delay_secs)
    server = ReviewServer(engine, port=cfg.port)
    server.start()
    click.echo(f"serving on {server.address}")
    sys.stdout.flush()
    try:
        result = engine.run()
    finally:
        trail.close()
    (out / "curve.csv").write_text(reward_curve(result.reward_trace),
                                   encoding="utf-8")
    _write_result(out, cfg, [{
        "record_id": record.record_id,
        "seed": record_seed,
        "artifacts": {"audit": "audit.jsonl", "curve": "curve.csv"},
        "result": result.to_dict(),
    }])
    click.echo(f"search complete: best_reward={result.best_reward:.4f} "
               f"reason={result.termination_reason}; still serving")
    sys.stdout.flush()
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()


@main.command()
@click.option("--out-dir", type=click.Path(), required=True,
              help="Directory holding result.json and audit trails.")
def replay(out_dir):
    """Re-apply every recorded action and check the audit trail
    reproduces the reported best claim and reward."""
    out = Path(out_dir)
    result_path = out / "result.json"
    try:
        payload = json.loads(result_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        _fail(f"cannot read {result_path}: {exc}")
    entries = payload.get("records", [])
    if not entries:
        _fail(f"{result_path} lists no records")
    bad = 0
    for entry in entries:
        record_id = entry.get("record_id", "?")
        if "error" in entry:
            click.echo(f"record {record_id}: skipped (run failed: "
                       f"{entry['error']})")
            continue
        audit_path = out / entry["artifacts"]["audit"]
        try:
            trail = load_trail(audit_path)
            summary = verify_against_result(
                trail,
                entry["result"]["best_reward"],
                entry["result"]["best_claim_text"],
            )
        except (OSError, AuditReplayError, KeyError) as exc:
            bad += 1
            click.echo(f"record {record_id}: REPLAY FAILED ({exc})", err=True)
            continue
        click.echo(f"record {record_id}: replay ok "
                   f"({summary.simulations} simulations, "
                   f"{summary.node_count} claims)")
    sys.exit(1 if bad else 0)


if __name__ == "__main__":
    main()
