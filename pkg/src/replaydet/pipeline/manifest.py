"""Corpus manifests: ``id<TAB>relative_path<TAB>label<TAB>subset`` per line."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .._fileio import atomic_write_text
from ..errors import FormatError

LABELS = ("genuine", "spoof", "unknown")
SUBSETS = ("train", "dev", "eval")


@dataclass(frozen=True)
class Entry:
    utt_id: str
    path: str
    label: str
    subset: str


@dataclass(frozen=True)
class Manifest:
    entries: tuple[Entry, ...]
    root: Path = Path(".")

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.utt_id in seen:
                raise FormatError(f"duplicate utterance id {e.utt_id!r}")
            seen.add(e.utt_id)
            if e.label not in LABELS:
                raise FormatError(f"{e.utt_id}: label {e.label!r} not in {LABELS}")
            if e.subset not in SUBSETS:
                raise FormatError(f"{e.utt_id}: subset {e.subset!r} not in {SUBSETS}")
            if e.subset in ("train", "dev") and e.label == "unknown":
                raise FormatError(f"{e.utt_id}: {e.subset} entries must be labelled")
            if any(c in e.utt_id for c in "/\\\t") or e.utt_id in ("", ".", ".."):
                raise FormatError(f"utterance id {e.utt_id!r} is not usable as a file name")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def audio_path(self, e: Entry) -> Path:
        return self.root / e.path

    def subset(self, name: str) -> list[Entry]:
        return [e for e in self.entries if e.subset == name]

    def labels(self) -> dict[str, str]:
        return {e.utt_id: e.label for e in self.entries}


def parse_manifest(text: str, root=".", source: str = "<manifest>") -> Manifest:
    entries = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise FormatError(f"{source}:{n}: expected 4 tab-separated fields, got {len(parts)}")
        entries.append(Entry(*(p.strip() for p in parts)))
    return Manifest(tuple(entries), Path(root))


def load_manifest(path) -> Manifest:
    path = Path(path)
    return parse_manifest(path.read_text(), path.parent, str(path))


def format_manifest(m: Manifest) -> str:
    return "".join(f"{e.utt_id}\t{e.path}\t{e.label}\t{e.subset}\n" for e in m.entries)


def save_manifest(path, m: Manifest) -> None:
    atomic_write_text(path, format_manifest(m))


def from_asvspoof2017(protocol, wav_dir, subset: str, root=None) -> Manifest:
    """Convert an ASVspoof 2017 protocol file (``file.wav label ...`` per line).

    Paths are stored relative to ``root`` (defaults to ``wav_dir``).
    """
    wav_dir = Path(wav_dir)
    root = Path(root) if root is not None else wav_dir
    entries = []
    for n, line in enumerate(Path(protocol).read_text().splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) < 2:
            raise FormatError(f"{protocol}:{n}: expected '<file> <label> ...'")
        name, label = parts[0], parts[1].lower()
        if label not in ("genuine", "spoof"):
            label = "unknown"
        rel = Path(wav_dir / name).resolve().relative_to(root.resolve())
        entries.append(Entry(Path(name).stem, rel.as_posix(), label, subset))
    return Manifest(tuple(entries), root)
