"""Manifest-driven orchestration: config, corpus manifests, synthetic data and stages."""

from .config import DESK_PROFILE, FULL_PROFILE, RunConfig, dump_config, load_config, parse_config
from .manifest import Entry, Manifest, from_asvspoof2017, load_manifest, save_manifest
from .stages import cmd_extract, cmd_fuse_eval, cmd_score, cmd_train
from .synth import synth_corpus

__all__ = [
    "DESK_PROFILE",
    "FULL_PROFILE",
    "RunConfig",
    "dump_config",
    "load_config",
    "parse_config",
    "Entry",
    "Manifest",
    "from_asvspoof2017",
    "load_manifest",
    "save_manifest",
    "cmd_extract",
    "cmd_fuse_eval",
    "cmd_score",
    "cmd_train",
    "synth_corpus",
]
