"""
Ponto de entrada da linha de comando.

Expõe o pipeline completo em subcomandos: layouts, teammates, manifest,
collect, dataset, eval e diversity. Todos os caminhos ficam sob `--out`;
flags têm precedência sobre variáveis AHT_* e estas sobre os padrões.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import structlog

from app.config import Settings, get_settings
from app.core.exceptions import (
    ExternalPolicyError,
    InsufficientEpisodesError,
    LayoutError,
    ManifestError,
    RecipeError,
    StoreError,
)
from app.core.history.rollout import CollectorConfig
from app.core.kitchen.layout import LAYOUT_NAMES
from app.core.teammates.sampling import SPLITS
from app.schemas.common import dumps
from app.schemas.manifest import BenchmarkEntry, CollectTask
from app.services import (
    CollectionService,
    DatasetService,
    DiversityService,
    EvaluationService,
    LayoutService,
    ManifestService,
    TeammateService,
)
from app.services.diversity_service import DIVERSITY_DIR
from app.services.evaluation_service import EVAL_DIR
from app.services.teammate_service import parse_families

logger = structlog.get_logger()

DOMAIN_ERRORS = (
    LayoutError,
    RecipeError,
    ManifestError,
    StoreError,
    ExternalPolicyError,
    InsufficientEpisodesError,
    ValueError,
)


def configure_logging(level: str, log_format: str) -> None:
    """Configura structlog sobre o logging da stdlib (saída em stderr)."""
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level, force=True)
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer() if log_format == "json" else structlog.dev.ConsoleRenderer(),
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def emit(obj) -> None:
    """Uma linha JSON em stdout."""
    sys.stdout.write(dumps(obj).decode("utf-8") + "\n")
    sys.stdout.flush()


# =============================================================================
# Subcomandos
# =============================================================================


def cmd_layouts(args: argparse.Namespace, settings: Settings) -> int:
    service = LayoutService()
    if args.action == "list":
        for summary in service.list_layouts(args.names):
            if args.json:
                emit(summary.model_dump(mode="json"))
            else:
                sys.stdout.write(
                    f"{summary.name}\tn={summary.n_ingredients} C={summary.channels}\t"
                    f"{summary.width}x{summary.height}\trecipes={summary.n_recipes}\t"
                    f"{summary.indicator}\t{summary.track}/{summary.split}\n"
                )
        return 0

    results = service.check(args.names)
    for result in results:
        emit({"layout": result.layout, "expected": result.expected, "observed": result.observed, "ok": result.ok})
    return 0 if all(r.ok for r in results) else 1


def cmd_teammates(args: argparse.Namespace, settings: Settings) -> int:
    service = TeammateService()
    specs = service.sample(parse_families(args.family), args.split, args.count, prefix=args.spec_prefix)
    output = Path(args.output) if args.output else Path(args.out) / "teammates" / f"{args.split}.jsonl"
    service.write(specs, output)
    emit({"path": str(output), "count": len(specs)})
    return 0


def cmd_manifest(args: argparse.Namespace, settings: Settings) -> int:
    service = ManifestService()
    teammates = TeammateService().read(args.teammates)
    if args.kind == "track":
        records = service.build_track(args.track, teammates, seed=args.seed, layouts=args.layouts)
        schema, default_name = BenchmarkEntry, f"{args.track}.jsonl"
    else:
        records = service.build_collect(
            teammates, seed=args.seed, track=args.track, split=args.split, layouts=args.layouts
        )
        schema, default_name = CollectTask, "collect.jsonl"
    output = Path(args.output) if args.output else Path(args.out) / "manifests" / default_name
    service.write(records, schema, output)
    emit({"path": str(output), "records": len(records)})
    return 0


def cmd_collect(args: argparse.Namespace, settings: Settings) -> int:
    config = CollectorConfig(
        num_streams=args.streams,
        episodes_per_stream=args.episodes,
        recorded_steps_per_episode=args.recorded_steps,
        save_interval=args.save_interval,
        simulate_full_episodes=args.simulate_full_episodes,
        ego=args.ego,
    )
    manifest = args.manifest or Path(args.out) / "manifests" / "collect.jsonl"
    tasks = ManifestService().load_collect(manifest)
    service = CollectionService(
        args.out,
        config,
        external_timeout_s=settings.EXTERNAL_TIMEOUT_S,
        external_attempts=settings.EXTERNAL_CONNECT_ATTEMPTS,
    )
    summary = service.run(
        tasks,
        workers=args.workers,
        retries=args.retries,
        resume=args.resume,
        fail_fast=args.fail_fast,
    )
    for result in summary.results:
        emit({
            "task_id": result.task_id,
            "status": result.status,
            "transitions": result.transitions,
            "attempts": result.attempts,
            "error": result.error,
        })
    return 0 if summary.ok else 1


def cmd_dataset(args: argparse.Namespace, settings: Settings) -> int:
    service = DatasetService(
        args.out,
        store_dir=args.store,
        chunk_length=settings.STORE_CHUNK_LENGTH,
        compression_level=settings.STORE_COMPRESSION_LEVEL,
        cache_bytes=settings.STORE_CACHE_BYTES,
    )
    if args.action == "build":
        summary = service.build(filter_k=args.filter_k, relabel=not args.no_relabel, overwrite=args.overwrite)
        emit({
            "tasks": summary.tasks,
            "streams_seen": summary.streams_seen,
            "histories_written": summary.histories_written,
            "transitions_seen": summary.transitions_seen,
            "transitions_written": summary.transitions_written,
            "retained_ratio": summary.retained_ratio,
        })
        return 0

    index_stats, scan_stats = service.inspect()
    emit({"index": index_stats.model_dump(), "scan": scan_stats.model_dump()})
    return 0 if index_stats == scan_stats else 1


def cmd_eval(args: argparse.Namespace, settings: Settings) -> int:
    entries = ManifestService().load_benchmark(args.manifest)
    report_dir = Path(args.report_dir) if args.report_dir else Path(args.out) / EVAL_DIR
    service = EvaluationService(
        report_dir,
        timeout_s=settings.EXTERNAL_TIMEOUT_S,
        attempts=settings.EXTERNAL_CONNECT_ATTEMPTS,
    )
    report = service.evaluate(
        entries,
        ego=args.ego,
        episodes=args.episodes,
        instances=args.instances,
        episode_len=args.episode_len,
        context_k=args.context_k,
        buffer=args.buffer,
        with_teammate=args.with_teammate,
        seed=args.seed,
        workers=args.workers,
    )
    for group in report.groups:
        emit({
            "layout": group.layout,
            "teammate_family": group.teammate_family,
            "instances": group.instances,
            "mean": group.mean,
            "std": group.std,
            "adaptation_gain": group.adaptation_gain,
        })
    return 0


def cmd_diversity(args: argparse.Namespace, settings: Settings) -> int:
    specs = TeammateService().read(args.policies)
    out_dir = Path(args.out) / DIVERSITY_DIR
    report = DiversityService(out_dir).compute(
        specs, args.states, seed=args.seed, layouts=args.layouts, episode_len=args.episode_len
    )
    emit({"path": str(out_dir), "families": report.families, "family_mean": report.family_mean})
    return 0


# =============================================================================
# Parser
# =============================================================================


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=settings.OUT_DIR, help="Diretório raiz das saídas")
    common.add_argument("--seed", type=int, default=settings.SEED, help="Seed raiz")
    common.add_argument("--workers", type=int, default=settings.WORKERS, help="Processos paralelos")
    common.add_argument("--log-level", default=settings.LOG_LEVEL)
    common.add_argument("--log-format", default=settings.LOG_FORMAT, choices=("json", "console"))

    parser = argparse.ArgumentParser(
        prog="aht-bench",
        description="Pipeline do benchmark de trabalho em equipe ad hoc.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    # layouts
    layouts = sub.add_parser("layouts", help="Layouts distribuídos")
    layouts_sub = layouts.add_subparsers(dest="action", required=True)
    for action in ("list", "check"):
        p = layouts_sub.add_parser(action, parents=[common])
        p.add_argument("names", nargs="*", help=f"Subconjunto de {', '.join(LAYOUT_NAMES)}")
        if action == "list":
            p.add_argument("--json", action="store_true", help="Uma linha JSON por layout")
    layouts.set_defaults(handler=cmd_layouts)

    # teammates
    teammates = sub.add_parser("teammates", help="Populações de parceiros")
    teammates_sub = teammates.add_subparsers(dest="action", required=True)
    sample = teammates_sub.add_parser("sample", parents=[common])
    sample.add_argument("--family", nargs="+", default=["all"], help="H1..H4 ou all")
    sample.add_argument("--split", choices=SPLITS, required=True)
    sample.add_argument("--count", type=int, default=1, help="Parceiros por família")
    sample.add_argument("--spec-prefix", default="aht")
    sample.add_argument("--output", default=None, help="Arquivo JSONL de saída")
    teammates.set_defaults(handler=cmd_teammates)

    # manifest
    manifest = sub.add_parser("manifest", help="Manifestos de coleta e de avaliação")
    manifest_sub = manifest.add_subparsers(dest="kind", required=True)
    track = manifest_sub.add_parser("track", parents=[common])
    track.add_argument("--track", choices=("teammate", "layout"), required=True)
    collect_manifest = manifest_sub.add_parser("collect", parents=[common])
    collect_manifest.add_argument("--track", choices=("teammate", "layout"), default="teammate")
    collect_manifest.add_argument("--split", choices=SPLITS, default="train")
    for p in (track, collect_manifest):
        p.add_argument("--teammates", required=True, help="JSONL de TeammateSpec")
        p.add_argument("--layouts", nargs="+", default=None)
        p.add_argument("--output", default=None)
    manifest.set_defaults(handler=cmd_manifest)

    # collect
    collect = sub.add_parser("collect", parents=[common], help="Coleta de históricos")
    collect.add_argument("--manifest", default=None, help="JSONL de CollectTask")
    collect.add_argument("--streams", type=int, default=settings.COLLECT_STREAMS)
    collect.add_argument("--episodes", type=int, default=settings.COLLECT_EPISODES)
    collect.add_argument("--recorded-steps", type=int, default=settings.COLLECT_RECORDED_STEPS)
    collect.add_argument("--save-interval", type=int, default=settings.COLLECT_SAVE_INTERVAL)
    collect.add_argument("--simulate-full-episodes", action="store_true")
    collect.add_argument("--ego", choices=("annealed", "random"), default="annealed")
    collect.add_argument("--resume", action=argparse.BooleanOptionalAction, default=True)
    collect.add_argument("--retries", type=int, default=settings.COLLECT_RETRIES)
    collect.add_argument("--fail-fast", action="store_true", default=settings.COLLECT_FAIL_FAST)
    collect.set_defaults(handler=cmd_collect)

    # dataset
    dataset = sub.add_parser("dataset", help="Armazenamento de históricos")
    dataset_sub = dataset.add_subparsers(dest="action", required=True)
    build = dataset_sub.add_parser("build", parents=[common])
    build.add_argument("--filter-k", type=int, default=None, help="Fluxos mantidos por tarefa")
    build.add_argument("--no-relabel", action="store_true", help="Não gerar expert_actions")
    build.add_argument("--overwrite", action="store_true")
    inspect = dataset_sub.add_parser("inspect", parents=[common])
    for p in (build, inspect):
        p.add_argument("--store", default=None, help="Diretório do armazenamento (padrão <out>/dataset)")
    dataset.set_defaults(handler=cmd_dataset)

    # eval
    evaluate = sub.add_parser("eval", parents=[common], help="Avaliação online")
    evaluate.add_argument("--manifest", required=True, help="JSONL de BenchmarkEntry")
    evaluate.add_argument("--ego", default="random", help="random, stay, h4 ou external:<endpoint>")
    evaluate.add_argument("--episodes", type=int, default=settings.EVAL_EPISODES)
    evaluate.add_argument("--instances", type=int, default=settings.EVAL_INSTANCES)
    evaluate.add_argument("--episode-len", type=int, default=settings.EVAL_EPISODE_LENGTH)
    evaluate.add_argument("--context-k", type=int, default=settings.CONTEXT_K)
    evaluate.add_argument("--buffer", choices=("step", "episode"), default="step")
    evaluate.add_argument("--with-teammate", action="store_true", help="Contexto com ações do parceiro")
    evaluate.add_argument("--report-dir", default=None)
    evaluate.set_defaults(handler=cmd_eval)

    # diversity
    diversity = sub.add_parser("diversity", parents=[common], help="Distâncias de Hamming")
    diversity.add_argument("--policies", required=True, help="JSONL de TeammateSpec")
    diversity.add_argument("--states", type=int, default=1000)
    diversity.add_argument("--layouts", nargs="+", default=None)
    diversity.add_argument("--episode-len", type=int, default=100)
    diversity.set_defaults(handler=cmd_diversity)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Executa um subcomando.

    Returns:
        0 em sucesso; 1 em erro de domínio ou tarefa falha
    """
    settings = get_settings()
    args = build_parser(settings).parse_args(argv)
    configure_logging(args.log_level.upper(), args.log_format)
    logger.debug("command_started", command=args.command, out=args.out, seed=args.seed)
    try:
        return args.handler(args, settings)
    except DOMAIN_ERRORS as e:
        logger.error("command_failed", command=args.command, error=str(e), error_type=type(e).__name__)
        sys.stderr.write(f"erro: {e}\n")
        return 1


def run(argv: Optional[List[str]] = None) -> None:
    sys.exit(main(argv))


if __name__ == "__main__":
    run()
