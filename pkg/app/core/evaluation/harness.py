"""
Avaliação online: um ego contra parceiros fixos, episódios em sequência.

Cada instância (entrada do manifesto) recebe um ego novo e roda todos os
episódios em ordem, de modo que políticas condicionadas ao histórico podem se
adaptar ao parceiro. O retorno registrado é a soma não descontada das
recompensas esparsas.
"""

from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple, Union

import pandas as pd
import structlog

from app.core.evaluation.metrics import adaptation_curve, adaptation_gain, family_aggregate
from app.core.exceptions import InsufficientEpisodesError
from app.core.history.egos import EgoPolicy
from app.core.kitchen.env import EnvConfig, KitchenEnv
from app.core.kitchen.layout import LayoutSpec, load_layout
from app.core.teammates.policy import make_policy
from app.repositories.artifact_repository import write_json
from app.schemas.manifest import BenchmarkEntry
from app.schemas.report import EvalReport, GroupSummary, InstanceResult

logger = structlog.get_logger()

EgoFactory = Callable[[LayoutSpec, int, int], EgoPolicy]
GroupKey = Tuple[str, str, str]


def _make_teammate(entry: BenchmarkEntry, layout: LayoutSpec, timeout_s: float, attempts: int):
    if entry.teammate_spec is not None:
        return make_policy(entry.teammate_spec, layout, agent_index=1)
    from app.core.evaluation.adapters import ExternalTeammate

    return ExternalTeammate.connect(entry.teammate_ref, layout, timeout_s=timeout_s, attempts=attempts)


def run_episodes(
    env: KitchenEnv,
    ego: EgoPolicy,
    teammate,
    episodes: int,
    episode_len: int,
    teammate_stream: Tuple = (),
) -> List[float]:
    """Roda `episodes` episódios em sequência e devolve os retornos esparsos."""
    returns = []
    for episode in range(episodes):
        state = env.reset(episode)
        ego.reset(episode)
        teammate.reset(episode, *teammate_stream)
        obs = env.observe(0)
        total = 0.0
        for _ in range(episode_len):
            a0 = int(ego.act(obs, state))
            a1 = int(teammate.act(state))
            outcome = env.step((a0, a1))
            next_obs = env.observe(0)
            total += outcome.reward_sparse
            ego.observe(obs, a0, outcome.reward_sparse, next_obs, outcome.done, a1)
            state, obs = outcome.next_state, next_obs
            if outcome.done:
                break
        returns.append(total)
    return returns


def evaluate_instance(
    entry: BenchmarkEntry,
    instance: int,
    ego_factory: EgoFactory,
    episodes: int,
    episode_len: int,
    timeout_s: float = 30.0,
    attempts: int = 5,
) -> InstanceResult:
    """Avalia um ego novo contra o parceiro de uma entrada do manifesto."""
    layout = load_layout(entry.layout)
    env = KitchenEnv(layout, EnvConfig(seed=entry.seed, horizon=episode_len), stream=("eval",))
    ego = ego_factory(layout, entry.seed, instance)
    teammate = _make_teammate(entry, layout, timeout_s, attempts)
    try:
        returns = run_episodes(env, ego, teammate, episodes, episode_len, (entry.seed, "eval"))
    finally:
        ego.close()
        close = getattr(teammate, "close", None)
        if close is not None:
            close()

    try:
        gain = adaptation_gain(returns)
    except InsufficientEpisodesError:
        gain = None
    mean = sum(returns) / len(returns) if returns else 0.0
    logger.info(
        "instance_evaluated",
        layout=entry.layout,
        family=entry.teammate_family,
        instance=instance,
        mean_return=mean,
    )
    return InstanceResult(
        instance=instance,
        layout=entry.layout,
        track=entry.track,
        teammate_family=entry.teammate_family,
        teammate_kind=entry.teammate_kind,
        spec_string=entry.teammate_spec.spec_string if entry.teammate_spec else entry.teammate_ref,
        seed=entry.seed,
        returns=returns,
        mean=mean,
        adaptation_gain=gain,
    )


def group_entries(entries: Sequence[BenchmarkEntry], instances: int) -> "OrderedDict[GroupKey, List[BenchmarkEntry]]":
    """Agrupa por (trilha, layout, família) na ordem do manifesto, até `instances` por grupo."""
    groups: "OrderedDict[GroupKey, List[BenchmarkEntry]]" = OrderedDict()
    for entry in entries:
        members = groups.setdefault((entry.track, entry.layout, entry.teammate_family), [])
        if len(members) < instances:
            members.append(entry)
    return groups


def summarize_group(key: GroupKey, results: Sequence[InstanceResult]) -> GroupSummary:
    track, layout, family = key
    returns = [r.returns for r in results]
    mean, std = family_aggregate(returns)
    curve_mean, curve_std = adaptation_curve(returns)
    try:
        gain = adaptation_gain(curve_mean)
    except InsufficientEpisodesError:
        gain = None
    return GroupSummary(
        layout=layout,
        track=track,
        teammate_family=family,
        instances=len(results),
        mean=mean,
        std=std,
        curve_mean=curve_mean.tolist(),
        curve_std=curve_std.tolist(),
        adaptation_gain=gain,
    )


def run_eval(
    entries: Sequence[BenchmarkEntry],
    ego_factory: EgoFactory,
    ego_name: str = "ego",
    episodes_per_instance: int = 100,
    instances: int = 5,
    episode_len: int = 100,
    seed: int = 0,
    workers: int = 1,
    timeout_s: float = 30.0,
    attempts: int = 5,
) -> EvalReport:
    """
    Avalia um ego em todas as entradas do manifesto.

    Args:
        entries: Entradas do manifesto de avaliação
        ego_factory: (layout, seed, instância) -> ego novo; precisa ser
            serializável por pickle quando workers > 1
        episodes_per_instance: Episódios em sequência por instância
        instances: Instâncias por (layout, família)
        episode_len: Passos por episódio

    Returns:
        EvalReport com resultados por instância e agregados por grupo

    Raises:
        LayoutError: Layout desconhecido no manifesto
    """
    groups = group_entries(entries, instances)
    for _, layout, _ in groups:
        load_layout(layout)

    jobs = [(key, i, entry) for key, members in groups.items() for i, entry in enumerate(members)]
    logger.info("eval_started", ego=ego_name, groups=len(groups), instances=len(jobs))
    args = (episodes_per_instance, episode_len, timeout_s, attempts)
    if workers > 1 and jobs:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(evaluate_instance, entry, i, ego_factory, *args) for _, i, entry in jobs]
            results = [f.result() for f in futures]
    else:
        results = [evaluate_instance(entry, i, ego_factory, *args) for _, i, entry in jobs]

    by_group: Dict[GroupKey, List[InstanceResult]] = OrderedDict((key, []) for key in groups)
    for (key, _, _), result in zip(jobs, results):
        by_group[key].append(result)

    report = EvalReport(
        ego=ego_name,
        episodes_per_instance=episodes_per_instance,
        instances_per_group=instances,
        episode_len=episode_len,
        seed=seed,
        results=results,
        groups=[summarize_group(key, members) for key, members in by_group.items() if members],
    )
    logger.info("eval_finished", ego=ego_name, groups=len(report.groups))
    return report


def curve_filename(layout: str, family: str) -> str:
    return f"{layout}__{family}.csv"


def write_report(report: EvalReport, out_dir: Union[str, Path]) -> Path:
    """
    Grava o relatório: curvas por (layout, família), tabelas CSV e summary.json.

    Returns:
        Diretório do relatório
    """
    out_dir = Path(out_dir)
    curves_dir = out_dir / "curves"
    curves_dir.mkdir(parents=True, exist_ok=True)

    for group in report.groups:
        frame = pd.DataFrame({
            "episode": range(len(group.curve_mean)),
            "mean": group.curve_mean,
            "std": group.curve_std,
        })
        frame.to_csv(curves_dir / curve_filename(group.layout, group.teammate_family), index=False)

    pd.DataFrame(
        [
            {
                "layout": g.layout,
                "track": g.track,
                "teammate_family": g.teammate_family,
                "instances": g.instances,
                "mean": g.mean,
                "std": g.std,
                "adaptation_gain": g.adaptation_gain,
            }
            for g in report.groups
        ],
        columns=["layout", "track", "teammate_family", "instances", "mean", "std", "adaptation_gain"],
    ).to_csv(out_dir / "groups.csv", index=False)

    pd.DataFrame(
        [
            {
                "layout": r.layout,
                "teammate_family": r.teammate_family,
                "teammate_kind": r.teammate_kind,
                "instance": r.instance,
                "seed": r.seed,
                "mean": r.mean,
                "adaptation_gain": r.adaptation_gain,
            }
            for r in report.results
        ],
        columns=["layout", "teammate_family", "teammate_kind", "instance", "seed", "mean", "adaptation_gain"],
    ).to_csv(out_dir / "instances.csv", index=False)

    write_json(out_dir / "summary.json", report.model_dump(mode="json"))
    logger.info("eval_report_written", out=str(out_dir), groups=len(report.groups))
    return out_dir
