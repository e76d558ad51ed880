"""Command-line surface.

Results go to stdout; progress and timing go to stderr so seeded
invocations are byte-reproducible.  Exit codes: 0 success, 2 usage,
3 data error, 4 outside the reference table.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from typing import Sequence

from . import calibration, engine, sample_size, sampling
from .core import Ballot, BetaSource, ContestSpec, INVALID_VOTE
from .errors import (
    ClipAuditError,
    InfiniteSampleSizeError,
    ManifestError,
    OutOfTableError,
    ValidationError,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_OUT_OF_TABLE = 4

_SOURCE_FLAGS = {
    "table": BetaSource.TABLE,
    "formula": BetaSource.FORMULA,
    "upper": BetaSource.FORMULA_UPPER,
    "simulate": BetaSource.SIMULATION,
    "manual": BetaSource.MANUAL,
}


def _alpha_arg(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return value


def _margin_arg(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"margin must lie in [0, 1], got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _int_list(text: str) -> list[int]:
    items = [piece for piece in text.split(",") if piece.strip()]
    if not items:
        raise argparse.ArgumentTypeError("list must be nonempty")
    return [_positive_int(piece) for piece in items]


def _alpha_list(text: str) -> list[float]:
    items = [piece for piece in text.split(",") if piece.strip()]
    if not items:
        raise argparse.ArgumentTypeError("list must be nonempty")
    return [_alpha_arg(piece) for piece in items]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clipaudit",
        description="Risk-limiting ballot-polling audits: stopping constants, "
        "sample-size estimates, simulation studies, and live audit sessions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_beta = sub.add_parser("beta", help="resolve the stopping constant for (n, alpha)")
    p_beta.add_argument("n", type=_positive_int)
    p_beta.add_argument("alpha", type=_alpha_arg)
    p_beta.add_argument("--source", choices=["table", "formula", "upper", "simulate"], default="table")
    p_beta.add_argument("--trials", type=_positive_int, default=1_000_000)
    p_beta.add_argument("--seed", type=int, default=0)
    p_beta.add_argument("--jobs", type=_positive_int, default=None)
    p_beta.add_argument("--format", choices=["human", "json", "csv"], default="human")

    p_table = sub.add_parser("table", help="regenerate stopping-constant table rows by simulation")
    p_table.add_argument("--n-list", type=_int_list, required=True)
    p_table.add_argument("--alpha-list", type=_alpha_list, required=True)
    p_table.add_argument("--trials", type=_positive_int, default=1_000_000)
    p_table.add_argument("--seed", type=int, default=0)
    p_table.add_argument("--jobs", type=_positive_int, default=None)
    p_table.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")

    p_est = sub.add_parser("estimate", help="expected sample sizes for a given true margin")
    p_est.add_argument("n", type=_positive_int)
    p_est.add_argument("alpha", type=_alpha_arg)
    p_est.add_argument("margin", type=_margin_arg)
    p_est.add_argument(
        "--beta-source", choices=["table", "formula", "upper", "manual"], default="formula"
    )
    p_est.add_argument("--beta", type=float, default=None)
    p_est.add_argument("--format", choices=["human", "json"], default="human")

    p_sim = sub.add_parser("simulate", help="measure audit sample sizes by simulation")
    p_sim.add_argument("--n", type=_positive_int, required=True)
    p_sim.add_argument("--margin", type=_margin_arg, required=True)
    p_sim.add_argument("--alpha", type=_alpha_arg, required=True)
    p_sim.add_argument(
        "--beta-source", choices=["table", "formula", "upper", "manual"], default="formula"
    )
    p_sim.add_argument("--beta", type=float, default=None)
    p_sim.add_argument("--trials", type=_positive_int, default=10_000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--jobs", type=_positive_int, default=None)
    p_sim.add_argument("--csv", default=None, help="write per-trial results to this path")
    p_sim.add_argument("--format", choices=["human", "json"], default="human")

    p_audit = sub.add_parser("audit", help="run a live or replayed ballot-polling audit")
    p_audit.add_argument("--manifest", required=True)
    p_audit.add_argument("--contests", required=True, help="JSON file with contest declarations")
    p_audit.add_argument("--alpha", type=_alpha_arg, required=True)
    p_audit.add_argument(
        "--beta-source", choices=["table", "formula", "upper", "simulate", "manual"], default="table"
    )
    p_audit.add_argument("--beta", type=float, default=None)
    p_audit.add_argument("--seed", type=int, default=0)
    p_audit.add_argument("--trials", type=_positive_int, default=1_000_000)
    p_audit.add_argument("--jobs", type=_positive_int, default=None)
    mode = p_audit.add_mutually_exclusive_group(required=True)
    mode.add_argument("--replay", default=None, help="CSV of interpretations to replay")
    mode.add_argument("--interactive", action="store_true")
    p_audit.add_argument("--format", choices=["human", "json"], default="human")

    p_serve = sub.add_parser("serve", help="run the local audit-session HTTP service")
    p_serve.add_argument("--host", default=os.environ.get("CLIPAUDIT_HOST", "127.0.0.1"))
    p_serve.add_argument("--port", type=int, default=int(os.environ.get("CLIPAUDIT_PORT", "8722")))
    p_serve.add_argument(
        "--data-dir", default=os.environ.get("CLIPAUDIT_DATA_DIR", "./clipaudit-data")
    )

    return parser


def _progress_printer(label: str):
    def report(done: int, total: int) -> None:
        print(f"{label}: {done}/{total} trials", file=sys.stderr, flush=True)

    return report


def _resolve(args, n: int, alpha: float, source_flag: str):
    source = _SOURCE_FLAGS[source_flag]
    if getattr(args, "beta", None) is not None:
        source = BetaSource.MANUAL
    progress = _progress_printer("calibration") if source is BetaSource.SIMULATION else None
    return calibration.resolve_stopping_constant(
        n,
        alpha,
        source,
        manual_beta=getattr(args, "beta", None),
        trials=getattr(args, "trials", 1_000_000),
        seed=getattr(args, "seed", 0),
        parallelism=getattr(args, "jobs", None),
        progress=progress,
    )


def cmd_beta(args) -> int:
    resolved = _resolve(args, args.n, args.alpha, args.source)
    report = {
        "command": "beta",
        "n": args.n,
        "alpha": args.alpha,
        "source": resolved.source.value,
        "beta": resolved.beta,
        "beta_text": engine.format_threshold(resolved.beta),
        "resolved_n": resolved.resolved_n,
        "resolved_alpha": resolved.resolved_alpha,
        "trials": resolved.trials,
        "seed": resolved.seed,
    }
    if args.format == "json":
        print(json.dumps(report, sort_keys=True))
    elif args.format == "csv":
        rows = [
            calibration.BetaRow(
                n=args.n,
                alpha=args.alpha,
                beta=resolved.beta,
                trials=resolved.trials or 0,
                seed=resolved.seed,
            )
        ]
        generator = (
            "reference-v1" if resolved.source is BetaSource.TABLE else resolved.source.value
        )
        calibration.BetaTable(rows=tuple(rows), generator=generator).to_csv(sys.stdout)
    else:
        print(f"n: {args.n}")
        print(f"alpha: {calibration.format_alpha(args.alpha)}")
        print(f"source: {resolved.source.value}")
        if resolved.resolved_n is not None:
            print(f"resolved_n: {resolved.resolved_n}")
            print(f"resolved_alpha: {calibration.format_alpha(resolved.resolved_alpha)}")
        if resolved.trials is not None:
            print(f"trials: {resolved.trials}")
            print(f"seed: {resolved.seed}")
        print(f"beta: {engine.format_threshold(resolved.beta)}")
    return EXIT_OK


def cmd_table(args) -> int:
    all_rows: list[calibration.BetaRow] = []
    total_steps = 0
    started = time.perf_counter()
    for n in args.n_list:
        job = calibration.CalibrationJob(
            n=n,
            alphas=tuple(sorted(set(args.alpha_list))),
            trials=args.trials,
            seed=args.seed,
            parallelism=args.jobs,
        )
        table = calibration.simulate_beta(job, progress=_progress_printer(f"n={n}"))
        all_rows.extend(table.rows)
        total_steps += n * args.trials
    elapsed = time.perf_counter() - started
    combined = calibration.BetaTable(rows=tuple(all_rows), generator=table.generator)
    if args.out == "-":
        combined.to_csv(sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            combined.to_csv(f)
    print(
        f"table: {len(all_rows)} rows, {total_steps} walk-steps in {elapsed:.1f}s "
        f"({total_steps / max(elapsed, 1e-9):.3e} steps/s)",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_estimate(args) -> int:
    resolved = _resolve(args, args.n, args.alpha, args.beta_source)
    report = {
        "command": "estimate",
        "n": args.n,
        "alpha": args.alpha,
        "margin": args.margin,
        "beta": resolved.beta,
        "beta_source": resolved.source.value,
        "crossover_beta": sample_size.bravo_crossover_beta(args.alpha),
    }
    try:
        clip = sample_size.expected_sample_size_clip(resolved.beta, args.margin)
        bravo = sample_size.expected_sample_size_bravo(args.alpha, args.margin)
        report["clip"] = {"raw": clip.raw, "ballots": clip.ballots}
        report["bravo"] = {"raw": bravo.raw, "ballots": bravo.ballots}
    except InfiniteSampleSizeError:
        report["clip"] = report["bravo"] = {"raw": None, "ballots": None, "infinite": True}
    if args.format == "json":
        print(json.dumps(report, sort_keys=True))
        return EXIT_OK
    print(f"n: {args.n}")
    print(f"alpha: {calibration.format_alpha(args.alpha)}")
    print(f"margin: {args.margin}")
    print(f"beta: {engine.format_threshold(resolved.beta)} ({resolved.source.value})")
    if report["clip"].get("infinite"):
        print("expected sample size: infinite (zero margin; only a full count decides a tie)")
        return EXIT_OK
    clip, bravo = report["clip"], report["bravo"]
    print(f"clip ballots: {clip['raw']:.2f} -> {clip['ballots']}")
    print(f"bravo ballots: {bravo['raw']:.2f} -> {bravo['ballots']}")
    favored = "clip" if resolved.beta < report["crossover_beta"] else "bravo"
    print(
        f"expected-size crossover at beta = {report['crossover_beta']:.3f} "
        f"({favored} favored here)"
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    resolved = _resolve(args, args.n, args.alpha, args.beta_source)
    scenario = sample_size.ScenarioSpec(
        n=args.n,
        margin=args.margin,
        alpha=args.alpha,
        beta=resolved.beta,
        trials=args.trials,
        seed=args.seed,
    )
    result = sample_size.measure_asn(
        scenario, parallelism=args.jobs, progress=_progress_printer("simulate")
    )
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as f:
            result.write_trials_csv(f)
    summary = result.to_summary_dict()
    summary["command"] = "simulate"
    summary["beta_source"] = resolved.source.value
    if args.format == "json":
        print(json.dumps(summary, sort_keys=True))
        return EXIT_OK
    print(f"n: {args.n}")
    print(f"margin: {args.margin}")
    print(f"alpha: {calibration.format_alpha(args.alpha)}")
    print(f"beta: {engine.format_threshold(resolved.beta)} ({resolved.source.value})")
    print(f"trials: {args.trials}")
    print(f"seed: {args.seed}")
    print(f"mean sample size: {result.mean:.2f}")
    print(f"stddev: {result.stddev:.2f}")
    for level, value in result.quantiles.items():
        print(f"quantile {level}: {value:.1f}")
    print(f"full-count fraction: {result.full_count_fraction:.5f}")
    return EXIT_OK


def _load_contest_specs(path: str, manifest_path: str) -> list[ContestSpec]:
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list) or not raw:
        raise ValidationError("contest file must hold a contest object or a nonempty list")
    needs_sizes = [d for d in raw if "ballots_cast" not in d]
    if needs_sizes:
        unchecked = sampling.load_manifest(manifest_path, None)
        for d in needs_sizes:
            d["ballots_cast"] = unchecked.contest_size(d["contest_id"])
    return [ContestSpec.from_dict(d) for d in raw]


def _prompt_choice(ballot_id: str, contest: ContestSpec) -> str:
    options = ", ".join(contest.candidates) + f", {INVALID_VOTE}"
    while True:
        print(
            f"ballot {ballot_id} | contest {contest.contest_id} | enter choice ({options}): ",
            end="",
            flush=True,
        )
        try:
            token = input().strip()
        except EOFError:
            raise ManifestError("input ended before the audit finished") from None
        if token == INVALID_VOTE or token in contest.candidates:
            return token
        print(f"unknown token {token!r}; valid entries: {options}")


def cmd_audit(args) -> int:
    contests = _load_contest_specs(args.contests, args.manifest)
    by_id = {c.contest_id: c for c in contests}
    profile = sampling.load_manifest(args.manifest, contests)
    replay_profile = None
    if args.replay:
        replay_profile = sampling.load_manifest(args.replay, contests, validate_sizes=False)
        unknown = replay_profile.ballot_ids() - profile.ballot_ids()
        if unknown:
            raise ManifestError(
                f"replay file references ballots not in the manifest: {sorted(unknown)[:5]}"
            )

    plan = engine.make_plan(
        contests,
        args.alpha,
        _SOURCE_FLAGS[args.beta_source] if args.beta is None else BetaSource.MANUAL,
        manual_beta=args.beta,
        trials=args.trials,
        seed=args.seed,
        parallelism=args.jobs,
    )
    session = engine.AuditSession(plan)
    draws = sampling.DrawSequence(args.seed)

    human = args.format == "human"
    if human:
        print(f"alpha: {calibration.format_alpha(args.alpha)}")
        print(f"seed: {args.seed}")
        for sub in plan.subaudits:
            print(
                f"subaudit {sub.contest_id} {sub.winner}>{sub.loser}: "
                f"n={sub.params.ballots_cast} beta={engine.format_threshold(sub.params.beta)} "
                f"({sub.params.beta_source.value})"
            )

    draw_no = 0
    while not session.finished():
        eligible = session.eligible_ballots(profile)
        if not eligible:
            break
        ballot_id = draws.next_draw(eligible)
        draw_no += 1
        manifest_ballot = profile.ballot(ballot_id)
        active = session.active_contests()
        relevant = [cid for cid in manifest_ballot.choices if cid in active]
        if args.replay:
            if ballot_id not in replay_profile:
                raise ManifestError(f"replay file has no interpretations for ballot {ballot_id!r}")
            replay_choices = replay_profile.ballot(ballot_id).choices
            missing = [cid for cid in relevant if cid not in replay_choices]
            if missing:
                raise ManifestError(
                    f"replay file lacks contest(s) {missing} for ballot {ballot_id!r}"
                )
            interpretations = {cid: replay_choices[cid] for cid in relevant}
        else:
            interpretations = {cid: _prompt_choice(ballot_id, by_id[cid]) for cid in relevant}
        session.ingest_ballot(Ballot(ballot_id, interpretations))
        if human:
            marks = " ".join(f"{cid}={interpretations[cid]}" for cid in relevant)
            print(f"draw {draw_no}: {ballot_id} {marks}")
            for sub, status in zip(plan.subaudits, session.subaudit_statuses()):
                threshold = sub.params.beta * math.sqrt(status.tally.pair_votes)
                print(
                    f"  {sub.contest_id} {sub.winner}>{sub.loser}: "
                    f"margin {status.tally.margin} vs threshold {threshold:.2f} "
                    f"[{status.state.value}]"
                )
        for contest in contests:
            cid = contest.contest_id
            if (
                session.contest_state(cid) is engine.ContestState.ACTIVE
                and session.contest_exhausted(cid)
            ):
                counted = engine.full_count(session, _profile_from_drawn(session), cid)
                if human:
                    _print_full_count(counted)

    verdict = session.verdict()
    if human:
        print(f"verdict: {verdict.kind.value}")
    else:
        report = {
            "command": "audit",
            "seed": args.seed,
            "snapshot": session.snapshot(),
        }
        print(engine.canonical_json(report))
    return EXIT_OK


def _profile_from_drawn(session: engine.AuditSession):
    from .core import Profile

    return Profile(Ballot(bid, interp) for bid, interp in session.drawn)


def _print_full_count(outcome: engine.FullCountOutcome) -> None:
    tally_text = " ".join(f"{c}={v}" for c, v in outcome.tallies.items())
    if outcome.tie:
        print(f"full count {outcome.contest_id}: {tally_text} -> tie at the winner boundary")
    else:
        agrees = "agrees with" if outcome.agrees_with_reported else "CONTRADICTS"
        print(
            f"full count {outcome.contest_id}: {tally_text} -> winners "
            f"{','.join(outcome.winners)} ({agrees} reported outcome)"
        )


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


_HANDLERS = {
    "beta": cmd_beta,
    "table": cmd_table,
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "audit": cmd_audit,
    "serve": cmd_serve,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except OutOfTableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OUT_OF_TABLE
    except (ClipAuditError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
