"""
Pipeline that ties the stages together and owns the run directory.

Stages:
    prepare   interaction file -> dataset.snapshot + stats.json
    search    snapshot -> baseline_eval.cache, rl_trace.jsonl, candidates/
    retrain   candidates for one sparsity -> final/<c>/
    baseline  ES or MR at one sparsity -> baselines/<kind>/<c>/
"""

import json
import shutil
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np

from src.config.settings import RunConfig, save_config
from src.core.errors import ArtifactExistsError, StateError
from src.core.event_bus import ITERATION_COMPLETED, Event, EventBus
from src.data.corpus import dataset_stats, load_interactions, split
from src.data.snapshot import SNAPSHOT_FILE, load_snapshot, save_snapshot, snapshot_digest
from src.evaluation.quality import BASELINE_FILE, FullEvalBaseline
from src.models.candidates import CandidateMaskSet
from src.models.embedding import load_mask, save_mask
from src.models.interactions import InteractionDataset
from src.models.manifest import MANIFEST_FILE, RunManifest, StageStatus
from src.recommenders import build_full_baseline
from src.rl.td3 import POLICY_FILE
from src.strategies.base_strategy import RetrainResult
from src.strategies.baselines import BASELINE_CLASSES, equal_size
from src.strategies.search_driver import SearchResult, run_search
from src.strategies.selective_retrain import CandidateStrategy
from src.utils.async_utils import default_parallelism
from src.utils.logging_utils import get_logger
from src.utils.random_utils import RandomStreams
from src.utils.time_utils import stopwatch

CONFIG_FILE = "config.json"
STATS_FILE = "stats.json"
TRACE_FILE = "rl_trace.jsonl"
METRICS_LOG_FILE = "metrics.jsonl"
EPISODES_FILE = "episodes.json"
CANDIDATES_DIR = "candidates"
CANDIDATE_INDEX = "candidates.json"
FINAL_DIR = "final"
BASELINES_DIR = "baselines"
METRICS_FILE = "metrics.json"
CHECKPOINT_FILE = "model.ckpt"
MASK_FILE = "mask.tsv"


def sparsity_label(c: float) -> str:
    """Directory name of a target sparsity: 0.8 -> '0.8', 0.95 -> '0.95'"""
    return f"{c:g}"


def _write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


class JsonLinesWriter:
    """Event subscriber appending one JSON record per line"""

    def __init__(self, path: Path, select: Callable[[Event], Dict[str, Any]]):
        self.path = path
        self.select = select
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("", encoding="utf-8")

    def __call__(self, event: Event) -> None:
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(json.dumps(self.select(event), sort_keys=True) + "\n")


class CIESSPipeline:
    """
    Runs pipeline stages for one resolved configuration.

    Args:
        config: validated run configuration
        force: overwrite existing artifacts instead of failing
        event_bus: shared bus; the CLI subscribes its console table here
    """

    def __init__(self, config: RunConfig, force: bool = False,
                 event_bus: Optional[EventBus] = None):
        self.config = config
        self.force = force
        self.event_bus = event_bus or EventBus()
        self.streams = RandomStreams(config.seed)
        self.threads = config.runtime.threads or default_parallelism()
        self.logger = get_logger(self.__class__.__name__)

    # ========== Run directory ==========

    def _guard(self, *paths: Path) -> None:
        existing = [str(p) for p in paths if p.exists()]
        if existing and not self.force:
            raise ArtifactExistsError(
                f"refusing to overwrite {', '.join(existing)}; pass --force to replace"
            )

    def _manifest(self, out: Path) -> RunManifest:
        if (out / MANIFEST_FILE).is_file():
            manifest = RunManifest.load(out)
            manifest.config = self.config.to_dict()
            return manifest
        return RunManifest(config=self.config.to_dict())

    def _record(self, out: Path, manifest: RunManifest, *paths: Path) -> None:
        for path in paths:
            manifest.add_artifact(path.relative_to(out).as_posix())
        manifest.save(out)

    def _start_stage(self, out: Path, stage: str) -> RunManifest:
        out.mkdir(parents=True, exist_ok=True)
        manifest = self._manifest(out)
        manifest.seeds["root"] = self.config.seed
        manifest.set_stage(stage, StageStatus.RUNNING)
        save_config(self.config, out / CONFIG_FILE)
        manifest.add_artifact(CONFIG_FILE)
        manifest.save(out)
        return manifest

    def _finish_stage(self, out: Path, manifest: RunManifest, stage: str, ok: bool) -> None:
        manifest.set_stage(stage, StageStatus.COMPLETED if ok else StageStatus.FAILED)
        manifest.save(out)

    # ========== Data ==========

    def load_dataset(self, data_dir: Union[str, Path]) -> InteractionDataset:
        path = Path(data_dir) / SNAPSHOT_FILE
        if not path.is_file():
            raise StateError(f"no dataset snapshot in {data_dir}; run the prepare command first")
        return load_snapshot(path)

    def prepare(self, input_path: Union[str, Path], out: Union[str, Path],
                format: Optional[str] = None) -> InteractionDataset:
        """Parse, filter and split an interaction file into a snapshot"""
        out = Path(out)
        self._guard(out / SNAPSHOT_FILE, out / STATS_FILE)
        data_cfg = self.config.data
        pairs = load_interactions(input_path, format or data_cfg.format)

        manifest = self._start_stage(out, "prepare")
        ok = False
        try:
            dataset = split(pairs, data_cfg.ratios, seed=self.config.seed,
                            min_interactions=data_cfg.min_interactions)
            snapshot = save_snapshot(dataset, out / SNAPSHOT_FILE)
            stats = dataset_stats(dataset)
            stats["snapshot_sha256"] = snapshot_digest(snapshot)
            _write_json(out / STATS_FILE, stats)
            self._record(out, manifest, snapshot, out / STATS_FILE)
            ok = True
        finally:
            self._finish_stage(out, manifest, "prepare", ok)
        self.logger.info("dataset prepared", users=dataset.num_users, items=dataset.num_items,
                         train=len(dataset.train), out=str(out))
        return dataset

    # ========== Baseline cache ==========

    def _baseline_matches(self, baseline: FullEvalBaseline, dataset: InteractionDataset) -> bool:
        meta = baseline.metadata or {}
        rec = self.config.recommender
        return (
            meta.get("backbone") == rec.backbone
            and meta.get("d_max") == rec.d_max
            and meta.get("seed") == self.config.seed
            and len(baseline.user_eval) == dataset.num_users
            and len(baseline.item_eval) == dataset.num_items
        )

    def ensure_baseline(self, dataset: InteractionDataset, out: Path,
                        *fallbacks: Path) -> FullEvalBaseline:
        """
        Full-size evaluation cache in `out`: reused from the first directory
        holding a matching cache, otherwise trained once.
        """
        for directory in (out, *fallbacks):
            path = directory / BASELINE_FILE
            if path.is_file():
                cached = FullEvalBaseline.load(path)
                if self._baseline_matches(cached, dataset):
                    self.logger.info("baseline cache reused", path=str(path))
                    if directory != out:
                        cached.save(out / BASELINE_FILE)
                    return cached

        self.logger.info("training full-size baseline", backbone=self.config.recommender.backbone)
        baseline, _, _ = build_full_baseline(
            self.config.recommender, dataset,
            self.streams.seed("baseline.init"), self.streams.generator("baseline.train"),
        )
        baseline.metadata = dict(baseline.metadata or {}, seed=self.config.seed)
        out.mkdir(parents=True, exist_ok=True)
        baseline.save(out / BASELINE_FILE)
        return baseline

    # ========== Search ==========

    def _write_candidates(self, root: Path, sets: Dict[float, CandidateMaskSet],
                          dataset: InteractionDataset) -> List[Path]:
        written = []
        d_max = self.config.recommender.d_max
        for c, candidate_set in sets.items():
            directory = root / sparsity_label(c)
            directory.mkdir(parents=True, exist_ok=True)
            index = []
            for rank, record in enumerate(candidate_set, start=1):
                path = directory / f"rank{rank}.mask"
                save_mask(path, record.dims, dataset.num_users, dataset.num_items, d_max)
                written.append(path)
                index.append({"rank": rank, "file": path.name, **record.summary()})
            written.append(_write_json(directory / CANDIDATE_INDEX, {"c": c, "candidates": index}))
        return written

    def search(self, data_dir: Union[str, Path], out: Union[str, Path]) -> SearchResult:
        """Run the RL search and write trace, metrics log and candidate masks"""
        data_dir, out = Path(data_dir), Path(out)
        dataset = self.load_dataset(data_dir)
        self._guard(out / TRACE_FILE, out / CANDIDATES_DIR)
        if self.force and (out / CANDIDATES_DIR).exists():
            shutil.rmtree(out / CANDIDATES_DIR)

        manifest = self._start_stage(out, "search")
        ok = False
        try:
            if data_dir.resolve() != out.resolve():
                shutil.copyfile(data_dir / SNAPSHOT_FILE, out / SNAPSHOT_FILE)
            baseline = self.ensure_baseline(dataset, out, data_dir)

            trace = JsonLinesWriter(out / TRACE_FILE, lambda e: e.data["trace"])
            metrics = JsonLinesWriter(out / METRICS_LOG_FILE, lambda e: e.data["metrics"])
            self.event_bus.subscribe(ITERATION_COMPLETED, trace)
            self.event_bus.subscribe(ITERATION_COMPLETED, metrics)
            try:
                result = run_search(dataset, self.config, baseline, self.event_bus)
            finally:
                self.event_bus.unsubscribe(ITERATION_COMPLETED, trace)
                self.event_bus.unsubscribe(ITERATION_COMPLETED, metrics)

            written = [out / SNAPSHOT_FILE, out / BASELINE_FILE, out / TRACE_FILE,
                       out / METRICS_LOG_FILE]
            written += self._write_candidates(out / CANDIDATES_DIR, result.tracker.global_sets, dataset)
            for window, sets in sorted(result.tracker.window_sets.items()):
                written += self._write_candidates(
                    out / CANDIDATES_DIR / f"window{window}", sets, dataset
                )
            written.append(_write_json(out / EPISODES_FILE, result.log.episodes))
            written.append(result.ensemble.save(out / POLICY_FILE))
            self._record(out, manifest, *written)
            ok = True
        finally:
            self._finish_stage(out, manifest, "search", ok)
        return result

    # ========== Retrain ==========

    def load_candidates(self, run_dir: Path, c: float, window: Optional[int] = None) -> CandidateMaskSet:
        root = run_dir / CANDIDATES_DIR
        if window is not None:
            root = root / f"window{window}"
        directory = root / sparsity_label(c)
        index_path = directory / CANDIDATE_INDEX
        candidates = CandidateMaskSet(c, self.config.search.top_l)
        if not index_path.is_file():
            return candidates
        index = json.loads(index_path.read_text(encoding="utf-8"))
        for entry in index["candidates"]:
            dims, _, _, _ = load_mask(directory / entry["file"])
            candidates.offer(dims, entry["q_mean"], entry["sparsity"], entry["episode"],
                             entry["iteration"])
        return candidates

    def _metrics_payload(self, result: RetrainResult, c: float, seconds: float,
                         **extra: Any) -> Dict[str, Any]:
        return {
            "backbone": self.config.recommender.backbone,
            "sparsity_target": c,
            "sparsity_achieved": result.sparsity,
            "recall@5": result.test_metrics["R@5"],
            "recall@20": result.test_metrics["R@20"],
            "ndcg@5": result.test_metrics["N@5"],
            "ndcg@20": result.test_metrics["N@20"],
            "val_q_mean": result.val_q_mean,
            "best_epoch": result.best_epoch,
            "num_parameters": int(result.dims.sum()),
            "wall_seconds": seconds,
            **extra,
        }

    def _write_final(self, directory: Path, result: RetrainResult, payload: Dict[str, Any],
                     dataset: InteractionDataset) -> List[Path]:
        directory.mkdir(parents=True, exist_ok=True)
        mask = directory / MASK_FILE
        save_mask(mask, result.dims, dataset.num_users, dataset.num_items,
                  self.config.recommender.d_max)
        written = [mask, _write_json(directory / METRICS_FILE, payload)]
        if result.recommender is not None:
            written.append(result.recommender.save_checkpoint(directory / CHECKPOINT_FILE))
        return written

    def retrain(self, run_dir: Union[str, Path], c: float,
                window: Optional[int] = None) -> Dict[str, Any]:
        """Selective retraining of the stored candidates for sparsity c"""
        run_dir = Path(run_dir)
        label = sparsity_label(c) if window is None else f"window{window}/{sparsity_label(c)}"
        final_dir = run_dir / FINAL_DIR / label
        self._guard(final_dir / METRICS_FILE)
        dataset = self.load_dataset(run_dir)
        candidates = self.load_candidates(run_dir, c, window)

        manifest = self._start_stage(run_dir, f"retrain:{label}")
        ok = False
        try:
            baseline = self.ensure_baseline(dataset, run_dir)
            strategy = CandidateStrategy(dataset, self.config.recommender, baseline, self.streams,
                                         self.threads, candidates=candidates)
            with stopwatch() as elapsed:
                best = strategy.run(c)
            rank = next(i for i, r in enumerate(strategy.results, start=1) if r is best)
            payload = self._metrics_payload(
                best, c, elapsed[0],
                chosen_rank=rank,
                candidates=[r.summary() for r in strategy.results],
                window=window,
            )
            written = self._write_final(final_dir, best, payload, dataset)
            self._record(run_dir, manifest, *written)
            ok = True
        finally:
            self._finish_stage(run_dir, manifest, f"retrain:{label}", ok)
        return payload

    # ========== Baselines ==========

    def baseline(self, data_dir: Union[str, Path], kind: str, c: float,
                 out: Optional[Union[str, Path]] = None, seed: int = 0) -> Dict[str, Any]:
        """ES or MR sizes at sparsity c, retrained to convergence"""
        if kind not in BASELINE_CLASSES:
            raise ValueError(f"unknown baseline kind {kind!r}; expected one of {sorted(BASELINE_CLASSES)}")
        data_dir = Path(data_dir)
        out = Path(out) if out is not None else data_dir
        directory = out / BASELINES_DIR / kind / sparsity_label(c)
        self._guard(directory / METRICS_FILE)
        dataset = self.load_dataset(data_dir)

        stage = f"baseline:{kind}:{sparsity_label(c)}"
        manifest = self._start_stage(out, stage)
        ok = False
        try:
            baseline = self.ensure_baseline(dataset, out, data_dir)
            cls = BASELINE_CLASSES[kind]
            kwargs = {"seed": seed} if kind == "mr" else {}
            strategy = cls(dataset, self.config.recommender, baseline, self.streams, self.threads,
                           **kwargs)
            with stopwatch() as elapsed:
                result = strategy.run(c)
            extra: Dict[str, Any] = {"kind": kind}
            if kind == "es":
                extra["uniform_dim"] = equal_size(self.config.recommender.d_max, c)
            else:
                extra["seed"] = seed
                extra["mean_dim"] = float(np.mean(result.dims))
            payload = self._metrics_payload(result, c, elapsed[0], **extra)
            written = self._write_final(directory, result, payload, dataset)
            self._record(out, manifest, *written)
            ok = True
        finally:
            self._finish_stage(out, manifest, stage, ok)
        return payload


__all__ = ["CIESSPipeline", "JsonLinesWriter", "sparsity_label", "CANDIDATES_DIR", "FINAL_DIR",
           "BASELINES_DIR", "METRICS_FILE", "TRACE_FILE", "CONFIG_FILE", "STATS_FILE"]
