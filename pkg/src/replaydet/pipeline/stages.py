"""Pipeline stages: extract, train, score and fuse/evaluate over a manifest.

Output layout under the run directory::

    features/<KIND>/<id>.fea
    models/arm1/<KIND>/{ubm,genuine,spoof}.gmm
    models/arm2/<KIND>/{pooled,genuine,spoof}.aen and {ubm,genuine,spoof}.gmm
    scores/<subset>/<arm>_<KIND>.tsv
    report/<tag>/{eer_report.tsv,fusion.model,fused_eval.tsv,det/*.tsv,det.png}
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import autoencoder as ae_mod
from .. import gmm as gmm_mod
from .._fileio import atomic_write_text
from ..audio import load_wav
from ..errors import InsufficientDataError, ReplayDetError, ShapeError
from ..evaluation import det_curve, eer, format_eer, write_det
from ..features.extract import extract_many
from ..features.io import FeatureKind, FeatureMatrix, read_features, write_features
from ..features.postproc import cmvn
from ..fusion import build_table, fuse_table, read_scores, save_fusion, train_fusion, write_scores
from .config import RunConfig
from .manifest import Entry, Manifest

log = logging.getLogger(__name__)

ROLE_FILES = {gmm_mod.Role.UBM: "ubm", gmm_mod.Role.GENUINE: "genuine", gmm_mod.Role.SPOOF: "spoof"}


def feature_path(out: Path, kind: FeatureKind, utt_id: str) -> Path:
    return out / "features" / kind.name / f"{utt_id}.fea"


def model_dir(out: Path, arm: str, kind: FeatureKind) -> Path:
    return out / "models" / arm / kind.name


def score_path(out: Path, subset: str, system: str) -> Path:
    return out / "scores" / subset / f"{system}.tsv"


def system_name(arm: str, kind: FeatureKind) -> str:
    return f"{arm}_{kind.name}"


def _seed(cfg: RunConfig, *parts: int) -> int:
    return int(np.random.SeedSequence([cfg.seed, *parts]).generate_state(1)[0])


# ---------------------------------------------------------------- extract


@dataclass
class ExtractSummary:
    written: int = 0
    skipped: int = 0
    failures: dict[str, str] = field(default_factory=dict)


def _extract_one(args):
    path, kinds, feature_cfg, targets = args
    try:
        feats = extract_many(kinds, load_wav(path), feature_cfg)
    except ReplayDetError as exc:
        return f"{type(exc).__name__}: {exc}"
    for kind, target in zip(kinds, targets):
        write_features(target, feats[kind])
    return None


def cmd_extract(manifest: Manifest, cfg: RunConfig, out, force: bool = False, jobs: int = 1) -> ExtractSummary:
    out = Path(out)
    summary = ExtractSummary()
    work, owners = [], []
    for e in manifest:
        kinds = [k for k in cfg.kinds if force or not feature_path(out, k, e.utt_id).exists()]
        summary.skipped += len(cfg.kinds) - len(kinds)
        if kinds:
            targets = [feature_path(out, k, e.utt_id) for k in kinds]
            work.append((str(manifest.audio_path(e)), kinds, cfg.features, targets))
            owners.append(e.utt_id)
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_one, work, chunksize=4))
    else:
        results = [_extract_one(w) for w in work]
    for utt_id, w, err in zip(owners, work, results):
        if err is None:
            summary.written += len(w[1])
        else:
            summary.failures[utt_id] = err
            log.error("extract %s failed: %s", utt_id, err)
    return summary


# ---------------------------------------------------------------- train


def _load(out: Path, kind: FeatureKind, entries: list[Entry]) -> list[FeatureMatrix]:
    mats = []
    for e in entries:
        path = feature_path(out, kind, e.utt_id)
        if not path.exists():
            raise InsufficientDataError(f"missing {kind.name} features for {e.utt_id} ({path})")
        mats.append(read_features(path))
    return mats


def _pool(mats: list[FeatureMatrix], cap: int, seed: int) -> np.ndarray:
    x = np.vstack([m.values for m in mats])
    if cap and x.shape[0] > cap:
        idx = np.sort(np.random.default_rng(seed).choice(x.shape[0], size=cap, replace=False))
        x = x[idx]
    return x


def _arm2_view(pooled: ae_mod.Autoencoder, fm: FeatureMatrix, mode: str) -> np.ndarray:
    if mode == "codes":
        rep = ae_mod.encode(pooled, fm.values)
    else:
        rep = ae_mod.reconstruct(pooled, fm.values)
    return cmvn(rep)


def _fit_gmms(genuine: np.ndarray, spoof: np.ndarray, cfg: RunConfig, seed: int) -> dict:
    pooled = _pool([FeatureMatrix(genuine, FeatureKind.MFCC), FeatureMatrix(spoof, FeatureKind.MFCC)], cfg.max_frames, seed)
    ubm = gmm_mod.train_ubm(pooled, cfg.gmm)
    r = cfg.gmm.relevance_factor
    return {
        gmm_mod.Role.UBM: ubm,
        gmm_mod.Role.GENUINE: gmm_mod.map_adapt(ubm, genuine, r, gmm_mod.Role.GENUINE),
        gmm_mod.Role.SPOOF: gmm_mod.map_adapt(ubm, spoof, r, gmm_mod.Role.SPOOF),
    }


def _save_gmms(directory: Path, models: dict) -> list[Path]:
    paths = []
    for role, g in models.items():
        path = directory / f"{ROLE_FILES[role]}.gmm"
        gmm_mod.save_gmm(path, g)
        paths.append(path)
    return paths


def _train_ae(mats: list[FeatureMatrix], cfg: RunConfig, seed: int) -> ae_mod.Autoencoder:
    data = _pool(mats, cfg.ae_max_frames, seed)
    return ae_mod.fit_autoencoder(data, cfg.ae_state(seed), cfg.ae_code_dim)


def cmd_train(manifest: Manifest, cfg: RunConfig, out, arm: str | None = None) -> list[Path]:
    """Train every model of the requested arm(s); returns the files written."""
    out = Path(out)
    arms = (arm,) if arm and arm != "both" else cfg.arms
    train = manifest.subset("train")
    gen_entries = [e for e in train if e.label == "genuine"]
    spf_entries = [e for e in train if e.label == "spoof"]
    if not gen_entries or not spf_entries:
        raise InsufficientDataError("training subset needs both genuine and spoof utterances")
    written = []
    for kind in cfg.kinds:
        gen = _load(out, kind, gen_entries)
        spf = _load(out, kind, spf_entries)
        need_class_aes = "arm2" in arms and cfg.augment or "arm1" in arms and cfg.augment_arm1
        aug_gen, aug_spf = [], []
        if need_class_aes:
            ae_gen = _train_ae(gen, cfg, _seed(cfg, int(kind), 1))
            ae_spf = _train_ae(spf, cfg, _seed(cfg, int(kind), 2))
            aug_gen, aug_spf = ae_mod.augment(ae_gen, gen), ae_mod.augment(ae_spf, spf)
            if "arm2" in arms:
                d = model_dir(out, "arm2", kind)
                for name, model in (("genuine", ae_gen), ("spoof", ae_spf)):
                    ae_mod.save_autoencoder(d / f"{name}.aen", model)
                    written.append(d / f"{name}.aen")

        if "arm1" in arms:
            g_pool, s_pool = list(gen), list(spf)
            if cfg.augment_arm1:
                g_pool, s_pool = g_pool + aug_gen, s_pool + aug_spf
            models = _fit_gmms(
                _pool(g_pool, cfg.max_frames, _seed(cfg, int(kind), 3)),
                _pool(s_pool, cfg.max_frames, _seed(cfg, int(kind), 4)),
                cfg,
                _seed(cfg, int(kind), 5),
            )
            written += _save_gmms(model_dir(out, "arm1", kind), models)
            log.info("trained arm1 %s", kind.name)

        if "arm2" in arms:
            d = model_dir(out, "arm2", kind)
            pooled = _train_ae(gen + spf, cfg, _seed(cfg, int(kind), 6))
            ae_mod.save_autoencoder(d / "pooled.aen", pooled)
            written.append(d / "pooled.aen")
            g_pool = [FeatureMatrix(_arm2_view(pooled, m, cfg.arm2_input), kind) for m in gen + (aug_gen if cfg.augment else [])]
            s_pool = [FeatureMatrix(_arm2_view(pooled, m, cfg.arm2_input), kind) for m in spf + (aug_spf if cfg.augment else [])]
            log.info(
                "arm2 %s pool: %d genuine + %d spoof frames",
                kind.name,
                sum(m.n_frames for m in g_pool),
                sum(m.n_frames for m in s_pool),
            )
            models = _fit_gmms(
                _pool(g_pool, cfg.max_frames, _seed(cfg, int(kind), 7)),
                _pool(s_pool, cfg.max_frames, _seed(cfg, int(kind), 8)),
                cfg,
                _seed(cfg, int(kind), 9),
            )
            written += _save_gmms(d, models)
            log.info("trained arm2 %s", kind.name)
    return written


# ---------------------------------------------------------------- score


def _load_models(out: Path, arm: str, kind: FeatureKind):
    d = model_dir(out, arm, kind)
    try:
        gen = gmm_mod.load_gmm(d / "genuine.gmm")
        spf = gmm_mod.load_gmm(d / "spoof.gmm")
        pooled = ae_mod.load_autoencoder(d / "pooled.aen") if arm == "arm2" else None
    except FileNotFoundError as exc:
        raise InsufficientDataError(f"missing model for {arm} {kind.name}: {exc.filename}") from exc
    return gen, spf, pooled


def _score_utts(args):
    arm, gen, spf, pooled, mode, paths = args
    out = []
    for path in paths:
        fm = read_features(path)
        x = _arm2_view(pooled, fm, mode) if arm == "arm2" else fm.values
        out.append(gmm_mod.llr_score(gen, spf, x))
    return out


def cmd_score(manifest: Manifest, cfg: RunConfig, out, subset: str, arm: str | None = None, jobs: int = 1) -> list[Path]:
    out = Path(out)
    arms = (arm,) if arm and arm != "both" else cfg.arms
    entries = manifest.subset(subset)
    if not entries:
        raise InsufficientDataError(f"manifest has no {subset} utterances")
    written = []
    for a in arms:
        for kind in cfg.kinds:
            gen, spf, pooled = _load_models(out, a, kind)
            paths = [feature_path(out, kind, e.utt_id) for e in entries]
            missing = [p for p in paths if not p.exists()]
            if missing:
                raise InsufficientDataError(f"missing {kind.name} features, e.g. {missing[0]}")
            if jobs > 1:
                chunks = [paths[i::jobs] for i in range(jobs)]
                with ProcessPoolExecutor(max_workers=jobs) as pool:
                    parts = list(pool.map(_score_utts, [(a, gen, spf, pooled, cfg.arm2_input, c) for c in chunks]))
                scores = [0.0] * len(paths)
                for i, part in enumerate(parts):
                    scores[i::jobs] = part
            else:
                scores = _score_utts((a, gen, spf, pooled, cfg.arm2_input, paths))
            if not np.all(np.isfinite(scores)):
                raise ShapeError(f"non-finite scores for {a} {kind.name}")
            target = score_path(out, subset, system_name(a, kind))
            write_scores(target, [e.utt_id for e in entries], scores)
            written.append(target)
    return written


# ---------------------------------------------------------------- fuse + evaluate


def available_systems(out, subset: str = "dev") -> list[str]:
    d = Path(out) / "scores" / subset
    return sorted(p.stem for p in d.glob("*.tsv")) if d.exists() else []


def resolve_systems(out, spec: str | None) -> list[str]:
    """``all``, ``arm1`` / ``arm2`` or a comma list of system names."""
    found = available_systems(out)
    if not spec or spec == "all":
        chosen = found
    elif spec in ("arm1", "arm2"):
        chosen = [s for s in found if s.startswith(spec + "_")]
    else:
        chosen = [s.strip() for s in spec.split(",") if s.strip()]
        unknown = [s for s in chosen if s not in found]
        if unknown:
            raise ShapeError(f"no dev scores for systems {unknown}")
    if not chosen:
        raise InsufficientDataError(f"no scored systems match {spec!r}")
    return chosen


@dataclass
class FusionReport:
    systems: list[str]
    eers: dict[str, float]
    fused_eer: float
    path: Path

    def rows(self) -> list[tuple[str, float]]:
        return [(s, self.eers[s]) for s in self.systems] + [("Fused", self.fused_eer)]


def format_report(rows) -> str:
    return "system\teer_percent\n" + "".join(f"{name}\t{format_eer(v)}\n" for name, v in rows)


def cmd_fuse_eval(
    manifest: Manifest, cfg: RunConfig, out, systems: str | None = None, tag: str = "fused"
) -> FusionReport:
    from ..plotting import plot_det

    out = Path(out)
    names = resolve_systems(out, systems)
    labels = manifest.labels()
    dev = build_table({s: read_scores(score_path(out, "dev", s)) for s in names}, labels)
    ev = build_table({s: read_scores(score_path(out, "eval", s)) for s in names}, labels)
    if any(lab == "unknown" for lab in ev.labels):
        raise InsufficientDataError("evaluation needs labelled eval utterances")

    model = train_fusion(dev, reg=cfg.fusion_reg, prior=cfg.fusion_prior)
    fused = fuse_table(model, ev)
    truth = ev.is_genuine()

    report_dir = out / "report" / tag
    save_fusion(report_dir / "fusion.model", model)
    write_scores(report_dir / "fused_eval.tsv", ev.ids, fused)
    curves = {}
    eers = {}
    for j, s in enumerate(names):
        eers[s] = eer(ev.scores[:, j], truth)
        curves[s] = det_curve(ev.scores[:, j], truth)
    curves["Fused"] = det_curve(fused, truth)
    for name, pts in curves.items():
        write_det(report_dir / "det" / f"{name}.tsv", pts)
    report = FusionReport(names, eers, eer(fused, truth), report_dir / "eer_report.tsv")
    atomic_write_text(report.path, format_report(report.rows()))
    plot_det(curves, report_dir / "det.png", title=tag)
    return report
