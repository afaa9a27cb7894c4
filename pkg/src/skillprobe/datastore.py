"""On-disk dataset layout, atomic JSON writes and conversation merging.

Layout under a dataset root::

    conversations/<skill_id>.json   {"skill_id", "conversations": [[utt, resp, ...], ...]}
    trees/<skill_id>.json           full conversation tree with runs
    findings.json, confound.json, coverage.csv, errors.json, summary.json

All documents are UTF-8 JSON with sorted keys so equal content gives equal bytes.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .explorer import ConversationTree


class DatastoreError(Exception):
    pass


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def atomic_write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
    except OSError as exc:
        raise DatastoreError(f"cannot write {path}: {exc}") from exc
    return path


def atomic_write_json(path: str | Path, doc: Any) -> Path:
    return atomic_write_text(path, dumps(doc))


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatastoreError(f"cannot read {path}: {exc}") from exc


_SAFE = re.compile(r"[^A-Za-z0-9._-]")


def file_stem(skill_id: str) -> str:
    stem = _SAFE.sub("_", skill_id)
    return stem if stem.strip(".") else "_" + stem


def check_conversation(conv: Any, where: str = "") -> list[str]:
    if not isinstance(conv, list) or not all(isinstance(s, str) for s in conv):
        raise DatastoreError(f"{where}conversation must be a list of strings")
    if len(conv) < 2 or len(conv) % 2:
        raise DatastoreError(f"{where}conversation must alternate utterance/response "
                             f"(got {len(conv)} entries)")
    return conv


@dataclass
class ConversationFile:
    skill_id: str
    conversations: list[list[str]] = field(default_factory=list)

    def __post_init__(self):
        for i, conv in enumerate(self.conversations):
            check_conversation(conv, f"{self.skill_id} conversation {i}: ")

    def to_dict(self) -> dict[str, Any]:
        return {"skill_id": self.skill_id, "conversations": [list(c) for c in self.conversations]}

    @classmethod
    def from_dict(cls, doc: Any) -> "ConversationFile":
        if not isinstance(doc, dict) or not isinstance(doc.get("skill_id"), str):
            raise DatastoreError("conversation file needs a skill_id")
        convs = doc.get("conversations", [])
        if not isinstance(convs, list):
            raise DatastoreError("conversations must be a list")
        return cls(doc["skill_id"], [list(c) if isinstance(c, list) else c for c in convs])

    @classmethod
    def from_tree(cls, tree: ConversationTree) -> "ConversationFile":
        return cls(tree.skill_id, [list(r.transcript) for r in tree.runs if len(r.transcript) >= 2])


def save_conversations(tree: ConversationTree | ConversationFile, path: str | Path) -> Path:
    doc = tree if isinstance(tree, ConversationFile) else ConversationFile.from_tree(tree)
    return atomic_write_json(path, doc.to_dict())


def load_conversations(path: str | Path) -> ConversationFile:
    return ConversationFile.from_dict(read_json(path))


def merge_runs(existing: ConversationFile, new: ConversationFile | ConversationTree) -> ConversationFile:
    """Union of conversations; existing order first, then unseen new ones in order."""
    if isinstance(new, ConversationTree):
        new = ConversationFile.from_tree(new)
    if existing.skill_id != new.skill_id:
        raise DatastoreError(f"cannot merge {new.skill_id!r} into {existing.skill_id!r}")
    seen = set()
    merged = []
    for conv in list(existing.conversations) + list(new.conversations):
        key = tuple(conv)
        if key not in seen:
            seen.add(key)
            merged.append(list(conv))
    return ConversationFile(existing.skill_id, merged)


def save_tree(tree: ConversationTree, path: str | Path) -> Path:
    return atomic_write_json(path, tree.to_dict())


def load_tree(path: str | Path) -> ConversationTree:
    doc = read_json(path)
    try:
        tree = ConversationTree.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise DatastoreError(f"malformed tree {path}: {exc}") from exc
    for run in tree.runs:
        check_conversation(run.transcript, f"{path} run: ")
    return tree


class Dataset:
    """A dataset directory; one writer per skill file."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def conversations_dir(self) -> Path:
        return self.root / "conversations"

    @property
    def trees_dir(self) -> Path:
        return self.root / "trees"

    def conversation_path(self, skill_id: str) -> Path:
        return self.conversations_dir / f"{file_stem(skill_id)}.json"

    def tree_path(self, skill_id: str) -> Path:
        return self.trees_dir / f"{file_stem(skill_id)}.json"

    def store(self, tree: ConversationTree) -> ConversationFile:
        """Write the tree and merge its runs into the skill's conversation file."""
        conv_path = self.conversation_path(tree.skill_id)
        doc = ConversationFile.from_tree(tree)
        if conv_path.exists():
            doc = merge_runs(load_conversations(conv_path), doc)
        save_conversations(doc, conv_path)
        save_tree(tree, self.tree_path(tree.skill_id))
        return doc

    def skill_ids(self) -> list[str]:
        if not self.trees_dir.is_dir():
            return []
        return sorted(read_json(p)["skill_id"] for p in self.trees_dir.glob("*.json"))

    def iter_trees(self) -> Iterator[ConversationTree]:
        if not self.trees_dir.is_dir():
            return
        for p in sorted(self.trees_dir.glob("*.json")):
            yield load_tree(p)

    def iter_conversation_files(self) -> Iterator[ConversationFile]:
        if not self.conversations_dir.is_dir():
            return
        for p in sorted(self.conversations_dir.glob("*.json")):
            yield load_conversations(p)

    def write(self, name: str, doc: Any) -> Path:
        return atomic_write_json(self.root / name, doc)

    def write_text(self, name: str, text: str) -> Path:
        return atomic_write_text(self.root / name, text)

    def read(self, name: str, default: Any = None) -> Any:
        path = self.root / name
        return read_json(path) if path.exists() else default

    def exists(self) -> bool:
        return self.root.is_dir()


def conversation_count(files: Iterable[ConversationFile]) -> int:
    return sum(len(f.conversations) for f in files)
