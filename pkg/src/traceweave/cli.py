"""Command-line pipeline: synth, ingest, run, score.

Exit codes: 0 ok (possibly with warnings), 1 fatal, 2 bad usage. Machine
output goes to stdout as JSON; diagnostics go to stderr. Nothing here reads
the wall clock, so reruns over the same corpus are byte-identical.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .analytics import DEFAULT_SESSION_GAP_MS, build_report, build_timeline, render_report_text
from .attribution import AttributionConfig, attribute_commits
from .behavior import LlmBackend, RuleBackend
from .chats import IngestReport, ingest_chats
from .errors import BackendError, CorpusError
from .models import Timeline, UserRef, dump_timeline, validate_timeline
from .shadow import RepoSource, read_shadow_history
from .synth import GroundTruth, Perturbation, SynthConfig, generate


@dataclass
class PipelineConfig:
    chats_dir: Path | None
    shadow_root: Path | None
    out_dir: Path
    attribution: AttributionConfig
    gap_ms: int = DEFAULT_SESSION_GAP_MS
    bins: int = 50
    classifier: str = "rules"
    llm_endpoint: str = ""
    jobs: int = 1
    write_text_report: bool = False


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2))


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    config_path = Path(path)
    if not config_path.is_file():
        raise CorpusError(f"config file missing: {config_path}")
    return json.loads(config_path.read_text(encoding="utf-8"))


def _attribution_config(file_cfg: dict, args: argparse.Namespace) -> AttributionConfig:
    cfg = AttributionConfig(
        window_s=file_cfg.get("window_s", 300.0),
        full_threshold=file_cfg.get("full_threshold", 1.0),
        partial_threshold=file_cfg.get("partial_threshold", 0.5),
        external_size_chars=file_cfg.get("external_size_chars", 1000),
        external_wpm=file_cfg.get("external_wpm", 100.0),
        chars_per_word=file_cfg.get("chars_per_word", 5.0),
    )
    if getattr(args, "window_s", None) is not None:
        cfg = replace(cfg, window_s=args.window_s)
    return cfg


def _pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    file_cfg = _load_config_file(getattr(args, "config", None))
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise CorpusError(f"corpus directory missing: {corpus}")

    chats_dir = Path(args.chats) if getattr(args, "chats", None) else corpus / "chats"
    shadow_root = Path(args.shadow) if getattr(args, "shadow", None) else corpus / "shadow"
    explicit_chats = getattr(args, "chats", None) is not None
    explicit_shadow = getattr(args, "shadow", None) is not None
    if explicit_chats and not chats_dir.is_dir():
        raise CorpusError(f"chat directory missing: {chats_dir}")
    if explicit_shadow and not shadow_root.is_dir():
        raise CorpusError(f"shadow root missing: {shadow_root}")

    gap_min = getattr(args, "gap_min", None)
    if gap_min is None:
        gap_min = file_cfg.get("gap_min", DEFAULT_SESSION_GAP_MS / 60000)
    bins = getattr(args, "bins", None) or file_cfg.get("bins", 50)
    classifier = getattr(args, "classifier", None) or file_cfg.get("classifier", "rules")
    out_dir = Path(getattr(args, "out", None) or file_cfg.get("out_dir", corpus / "out"))

    return PipelineConfig(
        chats_dir=chats_dir if chats_dir.is_dir() else None,
        shadow_root=shadow_root if shadow_root.is_dir() else None,
        out_dir=out_dir,
        attribution=_attribution_config(file_cfg, args),
        gap_ms=int(round(gap_min * 60000)),
        bins=int(bins),
        classifier=classifier,
        llm_endpoint=getattr(args, "llm_endpoint", None) or file_cfg.get("llm_endpoint", ""),
        jobs=getattr(args, "jobs", None) or file_cfg.get("jobs", 1),
        write_text_report=bool(getattr(args, "text", False)),
    )


def _discover_shadow_sources(shadow_root: Path | None) -> dict[str, RepoSource]:
    sources: dict[str, RepoSource] = {}
    if shadow_root is None:
        return sources
    for entry in sorted(shadow_root.iterdir()):
        if entry.is_dir():
            sources[entry.name] = RepoSource.of(entry)
        elif entry.is_file() and entry.suffix == ".bundle":
            sources[entry.stem] = RepoSource.of(entry)
    return sources


def _ingest_corpus(cfg: PipelineConfig) -> tuple[list, IngestReport, dict[str, RepoSource]]:
    if cfg.chats_dir is not None:
        sessions, report = ingest_chats(cfg.chats_dir)
    else:
        sessions, report = [], IngestReport()
        _warn("no chats directory in corpus; proceeding with shadow data only")
    sources = _discover_shadow_sources(cfg.shadow_root)
    return sessions, report, sources


def _user_hashes(sessions: list, sources: dict[str, RepoSource]) -> list[str]:
    users = {s.user.user_hash for s in sessions} | set(sources)
    return sorted(users)


class _FallbackBackend:
    """Use the remote classifier, fall back to rules when it is unreachable."""

    def __init__(self, primary: LlmBackend):
        self.primary = primary
        self.rules = RuleBackend()
        self._warned = False

    def classify(self, prompt_text: str):
        try:
            return self.primary.classify(prompt_text)
        except BackendError as exc:
            if not self._warned:
                _warn(f"{exc}; falling back to the rule backend")
                self._warned = True
            return self.rules.classify(prompt_text)


def _classifier_backend(cfg: PipelineConfig):
    if cfg.classifier == "llm":
        if not cfg.llm_endpoint:
            raise CorpusError("--classifier llm requires --llm-endpoint (or llm_endpoint in the config file)")
        return _FallbackBackend(LlmBackend(cfg.llm_endpoint))
    return RuleBackend()


def _build_user_timeline(user_hash: str, sessions: list, source: RepoSource | None,
                         cfg: PipelineConfig) -> Timeline:
    user = UserRef(user_hash)
    commits = read_shadow_history(source, user, on_warning=_warn) if source is not None else []
    user_sessions = [s for s in sessions if s.user.user_hash == user_hash]
    attributions = attribute_commits(commits, user_sessions, cfg.attribution)
    return build_timeline(user, commits, attributions, user_sessions,
                          attribution_window_s=cfg.attribution.window_s)


def _build_all_timelines(cfg: PipelineConfig, sessions: list,
                         sources: dict[str, RepoSource]) -> list[Timeline]:
    users = _user_hashes(sessions, sources)
    if not users:
        raise CorpusError("corpus contains no users (no chat sessions, no shadow repositories)")

    def job(user_hash: str) -> Timeline:
        return _build_user_timeline(user_hash, sessions, sources.get(user_hash), cfg)

    if cfg.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            timelines = list(pool.map(job, users))
    else:
        timelines = [job(u) for u in users]
    return timelines


def cmd_synth(args: argparse.Namespace) -> int:
    config = SynthConfig(
        seed=args.seed,
        n_users=args.users,
        sessions_per_user=args.sessions,
        prompts_per_session=args.prompts,
        p_accept=args.p_accept,
        perturbation=Perturbation(args.perturbation),
    )
    truth = generate(config, args.out)
    _emit({
        "corpus": str(args.out),
        "users": config.n_users,
        "truth_entries": len(truth.entries),
    })
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args)
    sessions, report, sources = _ingest_corpus(cfg)
    users = _user_hashes(sessions, sources)
    if not users:
        raise CorpusError("corpus contains no users (no chat sessions, no shadow repositories)")
    for warning in report.warnings:
        _warn(warning)

    shadow_commits = 0
    for user_hash, source in sources.items():
        shadow_commits += len(read_shadow_history(source, UserRef(user_hash), on_warning=_warn))
    _emit({
        "users": users,
        "chats": report.to_dict(),
        "shadow": {"repositories": len(sources), "commits": shadow_commits},
    })
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args)
    sessions, report, sources = _ingest_corpus(cfg)
    for warning in report.warnings:
        _warn(warning)

    timelines = _build_all_timelines(cfg, sessions, sources)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    outputs = []
    for timeline in timelines:
        for violation in validate_timeline(timeline):
            _warn(f"{timeline.user.user_hash[:12]}: {violation}")
        path = cfg.out_dir / f"timeline_{timeline.user.user_hash}.json"
        _atomic_write(path, dump_timeline(timeline))
        outputs.append(path.name)

    backend = _classifier_backend(cfg)
    analytics_report = build_report(timelines, gap_ms=cfg.gap_ms, bins=cfg.bins, backend=backend)
    _atomic_write(cfg.out_dir / "report.json", json.dumps(analytics_report, indent=2) + "\n")
    outputs.append("report.json")
    if cfg.write_text_report:
        _atomic_write(cfg.out_dir / "report.txt", render_report_text(analytics_report))
        outputs.append("report.txt")

    _emit({"out_dir": str(cfg.out_dir), "users": len(timelines), "outputs": sorted(outputs)})
    return 0


def _score_class(pairs: list[tuple[str, str]], label: str) -> dict:
    tp = sum(1 for predicted, actual in pairs if predicted == label and actual == label)
    fp = sum(1 for predicted, actual in pairs if predicted == label and actual != label)
    fn = sum(1 for predicted, actual in pairs if predicted != label and actual == label)
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return {"precision": precision, "recall": recall, "f1": f1, "tp": tp, "fp": fp, "fn": fn}


def score_corpus(cfg: PipelineConfig, truth: GroundTruth) -> dict:
    sessions, _report, sources = _ingest_corpus(cfg)
    timelines = _build_all_timelines(cfg, sessions, sources)

    predicted: dict[tuple[str, int, str], tuple[str, str | None]] = {}
    for timeline in timelines:
        seq_by_commit = {c.commit_id: i for i, c in enumerate(timeline.commits)}
        for a in timeline.attributions:
            key = (timeline.user.user_hash, seq_by_commit[a.commit_id], a.file_path)
            predicted[key] = (a.origin.value, a.matched_request_id)

    actual = truth.by_key()
    missing = sorted(set(actual) - set(predicted))
    unexpected = sorted(set(predicted) - set(actual))
    if missing or unexpected:
        raise CorpusError(
            f"truth/corpus mismatch: {len(missing)} truth entries unmatched, "
            f"{len(unexpected)} attributions without truth (first: {(missing + unexpected)[0]})"
        )

    pairs = [(predicted[k][0], actual[k].origin) for k in sorted(actual)]
    copilot_keys = [k for k in sorted(actual) if actual[k].origin == "copilot"]
    request_hits = sum(
        1 for k in copilot_keys
        if predicted[k][0] == "copilot" and predicted[k][1] == actual[k].request_id
    )
    return {
        "n_pairs": len(pairs),
        "per_class": {
            label: _score_class(pairs, label)
            for label in ("human", "copilot", "external_suspected")
        },
        "request_id_accuracy": (request_hits / len(copilot_keys)) if copilot_keys else None,
    }


def cmd_score(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args)
    truth_path = Path(args.truth) if args.truth else Path(args.corpus) / "truth.json"
    if not truth_path.is_file():
        raise CorpusError(f"truth file missing: {truth_path}")
    _emit(score_corpus(cfg, GroundTruth.load(truth_path)))
    return 0


def _add_pipeline_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("corpus", help="corpus directory (chats/ + shadow/)")
    sub.add_argument("--chats", help="override the chat directory")
    sub.add_argument("--shadow", help="override the shadow root")
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--window-s", dest="window_s", type=float, help="attribution window in seconds")
    sub.add_argument("--gap-min", dest="gap_min", type=float, help="session gap in minutes")
    sub.add_argument("--bins", type=int, help="overview density bins")
    sub.add_argument("--classifier", choices=("rules", "llm"), help="behavior classifier backend")
    sub.add_argument("--llm-endpoint", dest="llm_endpoint", help="endpoint for --classifier llm")
    sub.add_argument("--jobs", type=int, help="parallel per-user workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="traceweave",
        description="Reconstruct and analyze AI-assisted programming sessions",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="generate a synthetic corpus with ground truth")
    synth.add_argument("--out", required=True, help="output corpus directory (must be empty)")
    synth.add_argument("--seed", type=int, default=1)
    synth.add_argument("--users", type=int, default=1)
    synth.add_argument("--sessions", type=int, default=1)
    synth.add_argument("--prompts", type=int, default=2)
    synth.add_argument("--p-accept", dest="p_accept", type=float, default=1.0)
    synth.add_argument("--perturbation", default="none",
                       choices=[p.value for p in Perturbation])
    synth.set_defaults(func=cmd_synth)

    ingest = commands.add_parser("ingest", help="parse a corpus and print a summary")
    _add_pipeline_options(ingest)
    ingest.set_defaults(func=cmd_ingest)

    run = commands.add_parser("run", help="run the full pipeline and write timeline exports")
    _add_pipeline_options(run)
    run.add_argument("--out", help="output directory (default: <corpus>/out)")
    run.add_argument("--text", action="store_true", help="also write a text report")
    run.set_defaults(func=cmd_run)

    score = commands.add_parser("score", help="score attribution against ground truth")
    _add_pipeline_options(score)
    score.add_argument("--truth", help="truth file (default: <corpus>/truth.json)")
    score.set_defaults(func=cmd_score)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
