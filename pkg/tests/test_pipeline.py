import dataclasses
import logging
import re
import shutil
from pathlib import Path

import numpy as np
import pytest

from replaydet.audio import load_wav
from replaydet.errors import ConfigError, FormatError, InsufficientDataError, ShapeError
from replaydet.features.io import FeatureKind, read_features
from replaydet.fusion import read_scores
from replaydet.pipeline import stages
from replaydet.pipeline.config import DESK_PROFILE, FULL_PROFILE, dump_config, parse_config
from replaydet.pipeline.manifest import Entry, Manifest, format_manifest, from_asvspoof2017, parse_manifest
from replaydet.pipeline.synth import subset_counts, synth_corpus


def _digest(root: Path, pattern: str) -> dict[str, bytes]:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.glob(pattern)) if p.is_file()}


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory, tiny_corpus, tiny_cfg):
    """A complete tiny run shared by the read-only tests below."""
    out = tmp_path_factory.mktemp("run")
    summary = stages.cmd_extract(tiny_corpus, tiny_cfg, out)
    assert not summary.failures
    stages.cmd_train(tiny_corpus, tiny_cfg, out)
    for subset in ("dev", "eval"):
        stages.cmd_score(tiny_corpus, tiny_cfg, out, subset)
    stages.cmd_fuse_eval(tiny_corpus, tiny_cfg, out, "all", "exp3_all")
    return out


# ---------------------------------------------------------------- config


def test_config_round_trip():
    for profile in (FULL_PROFILE, DESK_PROFILE):
        assert parse_config(dump_config(profile)) == profile


def test_desk_profile_shape():
    assert DESK_PROFILE.kinds == (FeatureKind.MFCC, FeatureKind.CQCC, FeatureKind.LFCC)
    assert DESK_PROFILE.gmm.components == 16
    assert DESK_PROFILE.arms == ("arm1", "arm2")
    assert len(FULL_PROFILE.kinds) == 11 and FULL_PROFILE.gmm.components == 64


def test_config_errors():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("componets = 4")
    with pytest.raises(ConfigError):
        parse_config("components = many")
    with pytest.raises(ConfigError):
        parse_config("components = 6")
    with pytest.raises(ConfigError):
        parse_config("arm = arm3")
    with pytest.raises(ConfigError):
        parse_config("just words")
    with pytest.raises(ConfigError):
        parse_config("ae_epochs = 500")


def test_config_comments_and_kinds(tiny_cfg):
    assert tiny_cfg.kinds == (FeatureKind.MFCC, FeatureKind.LFCC)
    assert tiny_cfg.gmm.components == 2 and tiny_cfg.ae_code_dim == 8


# ---------------------------------------------------------------- manifest


def test_manifest_round_trip():
    text = "a\twav/a.wav\tgenuine\ttrain\nb\twav/b.wav\tspoof\tdev\nc\twav/c.wav\tunknown\teval\n"
    m = parse_manifest(text)
    assert format_manifest(m) == text
    assert m.labels() == {"a": "genuine", "b": "spoof", "c": "unknown"}


@pytest.mark.parametrize(
    "text",
    [
        "a\twav/a.wav\tgenuine\n",
        "a\tx\tgenuine\ttrain\na\ty\tspoof\ttrain\n",
        "a\tx\treplay\ttrain\n",
        "a\tx\tgenuine\ttest\n",
        "a\tx\tunknown\tdev\n",
        "a/b\tx\tgenuine\ttrain\n",
    ],
)
def test_manifest_errors(text):
    with pytest.raises(FormatError):
        parse_manifest(text)


def test_asvspoof_protocol_import(tmp_path):
    (tmp_path / "wav").mkdir()
    proto = tmp_path / "train.txt"
    proto.write_text("T_1000001.wav genuine - - -\nT_1000002.wav spoof S01 E02 P03\n\nT_1000003.wav - x\n")
    m = from_asvspoof2017(proto, tmp_path / "wav", "eval", root=tmp_path)
    assert [(e.utt_id, e.path, e.label) for e in m] == [
        ("T_1000001", "wav/T_1000001.wav", "genuine"),
        ("T_1000002", "wav/T_1000002.wav", "spoof"),
        ("T_1000003", "wav/T_1000003.wav", "unknown"),
    ]


# ---------------------------------------------------------------- synth


def test_synth_is_deterministic(tmp_path):
    synth_corpus(tmp_path / "a", size=100, seed=7)
    synth_corpus(tmp_path / "b", size=100, seed=7)
    a, b = _digest(tmp_path / "a", "**/*"), _digest(tmp_path / "b", "**/*")
    assert a == b
    assert len((tmp_path / "a" / "manifest.tsv").read_text().splitlines()) == 100


def test_synth_layout(tiny_corpus):
    counts = subset_counts(40)
    assert sum(g + s for g, s in counts.values()) == 40
    for subset, (g, s) in counts.items():
        labels = [e.label for e in tiny_corpus.subset(subset)]
        assert labels.count("genuine") == g and labels.count("spoof") == s


def test_spoof_is_altered_replay_of_its_source(tiny_corpus):
    gen = load_wav(tiny_corpus.audio_path(next(e for e in tiny_corpus if e.utt_id == "TG0000")))
    spf = load_wav(tiny_corpus.audio_path(next(e for e in tiny_corpus if e.utt_id == "TS0000")))
    assert gen.sample_rate == spf.sample_rate == 16000
    n = min(len(gen), len(spf))
    assert not np.allclose(gen.samples[:n], spf.samples[:n], atol=1e-3)
    # same source, so the durations agree to within the replay filter tails
    assert abs(len(gen) - len(spf)) < 0.05 * len(gen)


def test_spoof_spectrum_differs_from_source(tiny_corpus):
    by_id = {e.utt_id: e for e in tiny_corpus}
    for i in range(3):
        gen = load_wav(tiny_corpus.audio_path(by_id[f"DG{i:04d}"])).samples
        spf = load_wav(tiny_corpus.audio_path(by_id[f"DS{i:04d}"])).samples
        n = min(gen.size, spf.size)
        a = np.log(np.abs(np.fft.rfft(gen[:n])) + 1e-9)
        b = np.log(np.abs(np.fft.rfft(spf[:n])) + 1e-9)
        assert np.sqrt(np.mean((a - b) ** 2)) > 0.1


def test_synth_rejects_tiny_corpus(tmp_path):
    with pytest.raises(ValueError):
        synth_corpus(tmp_path, size=10)


# ---------------------------------------------------------------- extract


def test_extract_writes_one_file_per_kind_and_is_idempotent(tmp_path, tiny_corpus):
    cfg = DESK_PROFILE
    two = Manifest(tiny_corpus.entries[:2], tiny_corpus.root)
    first = stages.cmd_extract(two, cfg, tmp_path)
    assert first.written == 6 and first.skipped == 0
    assert len(list((tmp_path / "features").rglob("*.fea"))) == 6
    fm = read_features(stages.feature_path(tmp_path, FeatureKind.CQCC, two.entries[0].utt_id))
    assert fm.dim == 60
    before = _digest(tmp_path, "features/**/*.fea")
    again = stages.cmd_extract(two, cfg, tmp_path)
    assert again.written == 0 and again.skipped == 6
    assert _digest(tmp_path, "features/**/*.fea") == before


def test_extract_reports_bad_audio_and_keeps_going(tmp_path, tiny_corpus, tiny_cfg):
    ten = list(tiny_corpus.entries[:10])
    broken = tmp_path / "broken.wav"
    broken.write_bytes(b"RIFF\x00\x00\x00\x00WAVEjunk")
    ten[4] = Entry(ten[4].utt_id, str(broken), ten[4].label, ten[4].subset)
    m = Manifest(tuple(ten), tiny_corpus.root)
    summary = stages.cmd_extract(m, tiny_cfg, tmp_path / "run")
    assert list(summary.failures) == [ten[4].utt_id]
    assert summary.written == 9 * len(tiny_cfg.kinds)


def test_parallel_extract_matches_serial(tmp_path, tiny_corpus, tiny_cfg):
    six = Manifest(tiny_corpus.entries[:6], tiny_corpus.root)
    stages.cmd_extract(six, tiny_cfg, tmp_path / "a", jobs=1)
    stages.cmd_extract(six, tiny_cfg, tmp_path / "b", jobs=2)
    assert _digest(tmp_path / "a", "features/**/*") == _digest(tmp_path / "b", "features/**/*")


# ---------------------------------------------------------------- train / score / fuse


def test_model_files(run_dir, tiny_cfg):
    for kind in tiny_cfg.kinds:
        arm1 = sorted(p.name for p in stages.model_dir(run_dir, "arm1", kind).iterdir())
        arm2 = sorted(p.name for p in stages.model_dir(run_dir, "arm2", kind).iterdir())
        assert arm1 == ["genuine.gmm", "spoof.gmm", "ubm.gmm"]
        assert arm2 == ["genuine.aen", "genuine.gmm", "pooled.aen", "spoof.aen", "spoof.gmm", "ubm.gmm"]


def test_arm1_file_count_scales_with_kinds(tmp_path, tiny_corpus, tiny_cfg):
    cfg = dataclasses.replace(tiny_cfg, kinds=(FeatureKind.LPCC,), arm="arm1")
    stages.cmd_extract(tiny_corpus, cfg, tmp_path)
    written = stages.cmd_train(tiny_corpus, cfg, tmp_path)
    assert len(written) == 3 * len(cfg.kinds)
    assert not (tmp_path / "models" / "arm2").exists()


@pytest.mark.slow
def test_all_eleven_kinds(tmp_path, tiny_corpus, tiny_cfg):
    cfg = dataclasses.replace(
        tiny_cfg,
        kinds=tuple(FeatureKind),
        ae_epochs=1,
        features=dataclasses.replace(tiny_cfg.features, cqt_octaves=5),
    )
    assert not stages.cmd_extract(tiny_corpus, cfg, tmp_path).failures
    arm1 = stages.cmd_train(tiny_corpus, cfg, tmp_path, arm="arm1")
    assert len(arm1) == 33 and all(p.suffix == ".gmm" for p in arm1)
    stages.cmd_train(tiny_corpus, cfg, tmp_path, arm="arm2")
    for subset in ("dev", "eval"):
        assert len(stages.cmd_score(tiny_corpus, cfg, tmp_path, subset)) == 22


def test_arm2_pool_doubles_with_augmentation(run_dir, tiny_corpus, tiny_cfg, tmp_path, caplog):
    shutil.copytree(run_dir / "features", tmp_path / "features")
    with caplog.at_level(logging.INFO, logger="replaydet.pipeline.stages"):
        stages.cmd_train(tiny_corpus, dataclasses.replace(tiny_cfg, kinds=(FeatureKind.MFCC,)), tmp_path, arm="arm2")
    msg = next(r.getMessage() for r in caplog.records if "pool:" in r.getMessage())
    n_gen, n_spf = map(int, re.findall(r"(\d+) (?:genuine|spoof)", msg))
    train = tiny_corpus.subset("train")
    frames = {
        lab: sum(read_features(stages.feature_path(tmp_path, FeatureKind.MFCC, e.utt_id)).n_frames for e in train if e.label == lab)
        for lab in ("genuine", "spoof")
    }
    assert (n_gen, n_spf) == (2 * frames["genuine"], 2 * frames["spoof"])


def test_training_is_reproducible(run_dir, tiny_corpus, tiny_cfg, tmp_path):
    shutil.copytree(run_dir / "features", tmp_path / "features")
    stages.cmd_train(tiny_corpus, tiny_cfg, tmp_path)
    assert _digest(tmp_path, "models/**/*") == _digest(run_dir, "models/**/*")


def test_seed_changes_models(run_dir, tiny_corpus, tiny_cfg, tmp_path):
    shutil.copytree(run_dir / "features", tmp_path / "features")
    stages.cmd_train(tiny_corpus, dataclasses.replace(tiny_cfg, seed=99), tmp_path, arm="arm2")
    a = (tmp_path / "models/arm2/MFCC/pooled.aen").read_bytes()
    assert a != (run_dir / "models/arm2/MFCC/pooled.aen").read_bytes()


def test_score_files(run_dir, tiny_corpus, tiny_cfg):
    for subset in ("dev", "eval"):
        files = sorted(p.name for p in (run_dir / "scores" / subset).glob("*.tsv"))
        assert files == sorted(f"{a}_{k.name}.tsv" for a in ("arm1", "arm2") for k in tiny_cfg.kinds)
        ids = sorted(e.utt_id for e in tiny_corpus.subset(subset))
        for f in files:
            lines = (run_dir / "scores" / subset / f).read_text().splitlines()
            assert sorted(line.split("\t")[0] for line in lines) == ids
            assert np.all(np.isfinite(list(read_scores(run_dir / "scores" / subset / f).values())))


def test_report_outputs(run_dir, tiny_cfg):
    d = run_dir / "report" / "exp3_all"
    rows = (d / "eer_report.tsv").read_text().splitlines()
    assert rows[0] == "system\teer_percent"
    names = [r.split("\t")[0] for r in rows[1:]]
    assert names == sorted(stages.available_systems(run_dir)) + ["Fused"]
    for r in rows[1:]:
        assert re.fullmatch(r"\d+\.\d\d", r.split("\t")[1])
    assert sorted(p.stem for p in (d / "det").glob("*.tsv")) == sorted(names)
    assert (d / "det.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert (d / "fusion.model").exists() and (d / "fused_eval.tsv").exists()


def test_single_system_fusion_keeps_its_eer(run_dir, tiny_corpus, tiny_cfg):
    rep = stages.cmd_fuse_eval(tiny_corpus, tiny_cfg, run_dir, "arm1_MFCC", "single")
    assert rep.fused_eer == pytest.approx(rep.eers["arm1_MFCC"], abs=1e-6)


def test_system_selection(run_dir):
    assert stages.resolve_systems(run_dir, "arm2") == ["arm2_LFCC", "arm2_MFCC"]
    assert stages.resolve_systems(run_dir, "arm1_LFCC,arm2_MFCC") == ["arm1_LFCC", "arm2_MFCC"]
    with pytest.raises(ShapeError):
        stages.resolve_systems(run_dir, "arm1_CQCC")


def test_no_temporary_files_left(run_dir):
    assert not [p for p in run_dir.rglob("*") if ".tmp" in p.name]


def test_resume_after_deleting_a_stage(run_dir, tiny_corpus, tiny_cfg, tmp_path):
    work = tmp_path / "run"
    shutil.copytree(run_dir, work)
    shutil.rmtree(work / "models")
    shutil.rmtree(work / "scores")
    stages.cmd_train(tiny_corpus, tiny_cfg, work)
    for subset in ("dev", "eval"):
        stages.cmd_score(tiny_corpus, tiny_cfg, work, subset)
    stages.cmd_fuse_eval(tiny_corpus, tiny_cfg, work, "all", "exp3_all")
    for pattern in ("models/**/*", "scores/**/*", "report/exp3_all/eer_report.tsv", "report/exp3_all/det/*"):
        assert _digest(work, pattern) == _digest(run_dir, pattern)


def test_missing_inputs_are_reported(tmp_path, tiny_corpus, tiny_cfg):
    with pytest.raises(InsufficientDataError):
        stages.cmd_train(tiny_corpus, tiny_cfg, tmp_path)
    with pytest.raises(InsufficientDataError):
        stages.cmd_score(tiny_corpus, tiny_cfg, tmp_path, "dev")
