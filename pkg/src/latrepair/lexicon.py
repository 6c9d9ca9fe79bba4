"""Word -> POS distribution / semantic class lookup and the editing-term list."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

DEFAULT_EDITING_TERMS = (("uh",), ("uhm",), ("well",), ("i", "mean"), ("no",))
UNK_POS = "UNK"
UNK_SEM = "UNK"


class LexiconError(ValueError):
    pass


class Triple(NamedTuple):
    word: str
    pos: str
    sem: str


@dataclass
class Lexicon:
    pos_table: dict[str, list[tuple[str, float]]] = field(default_factory=dict)
    sem_table: dict[str, str] = field(default_factory=dict)
    editing_terms: list[tuple[str, ...]] = field(default_factory=lambda: list(DEFAULT_EDITING_TERMS))
    unknown_pos_tag: str = UNK_POS
    unknown_sem_class: str = UNK_SEM

    def __post_init__(self):
        self.pos_table = {
            w.lower(): sorted(((t, float(p)) for t, p in dict(d).items()), key=lambda tp: (-tp[1], tp[0]))
            for w, d in self.pos_table.items()
        }
        self.sem_table = {w.lower(): c for w, c in self.sem_table.items()}
        self.editing_terms = [tuple(t.lower() for t in _phrase(e)) for e in self.editing_terms]
        self.validate()

    def validate(self) -> None:
        for word, dist in self.pos_table.items():
            if not dist:
                raise LexiconError(f"empty POS distribution for {word!r}")
            if any(p <= 0 for _, p in dist):
                raise LexiconError(f"non-positive POS probability for {word!r}")
            total = math.fsum(p for _, p in dist)
            if abs(total - 1.0) > 1e-9:
                raise LexiconError(f"POS probabilities for {word!r} sum to {total}")
        seen = set()
        for entry in self.editing_terms:
            if not entry:
                raise LexiconError("empty editing-term entry")
            if entry in seen:
                raise LexiconError(f"duplicate editing term {' '.join(entry)!r}")
            seen.add(entry)

    @property
    def pos_tags(self) -> list[str]:
        tags = {t for dist in self.pos_table.values() for t, _ in dist}
        tags.add(self.unknown_pos_tag)
        return sorted(tags)

    @property
    def sem_classes(self) -> list[str]:
        classes = set(self.sem_table.values())
        classes.add(self.unknown_sem_class)
        return sorted(classes)

    @property
    def max_editing_len(self) -> int:
        return max((len(e) for e in self.editing_terms), default=0)

    def best_tag(self, word: str) -> str:
        return pos_distribution(self, word)[0][0]

    def triple(self, word: str, pos: str | None = None) -> Triple:
        word = word.lower()
        return Triple(word, pos if pos is not None else self.best_tag(word), semantic_class(self, word))

    def to_dict(self) -> dict:
        return {
            "pos_table": {w: dict(d) for w, d in sorted(self.pos_table.items())},
            "sem_table": dict(sorted(self.sem_table.items())),
            "editing_terms": [" ".join(e) for e in self.editing_terms],
            "unknown_pos": self.unknown_pos_tag,
            "unknown_sem": self.unknown_sem_class,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Lexicon":
        unknown = set(obj) - {"pos_table", "sem_table", "editing_terms", "unknown_pos", "unknown_sem"}
        if unknown:
            raise LexiconError(f"unknown lexicon field(s) {sorted(unknown)}")
        return cls(
            pos_table=obj.get("pos_table", {}),
            sem_table=obj.get("sem_table", {}),
            editing_terms=obj.get("editing_terms", list(DEFAULT_EDITING_TERMS)),
            unknown_pos_tag=obj.get("unknown_pos", UNK_POS),
            unknown_sem_class=obj.get("unknown_sem", UNK_SEM),
        )

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True, ensure_ascii=False)
            fh.write("\n")


def _phrase(entry) -> Sequence[str]:
    return entry.split() if isinstance(entry, str) else entry


def pos_distribution(lex: Lexicon, word: str) -> list[tuple[str, float]]:
    """Tags a word can carry, most probable first; unknown words get the UNK tag."""
    dist = lex.pos_table.get(word.lower())
    if dist is None:
        return [(lex.unknown_pos_tag, 1.0)]
    return list(dist)


def semantic_class(lex: Lexicon, word: str) -> str:
    return lex.sem_table.get(word.lower(), lex.unknown_sem_class)


def match_editing_term(lex: Lexicon, tokens: Sequence[str]) -> int:
    """Length of the longest editing-term entry that prefixes ``tokens`` (0 if none)."""
    toks = [t.lower() for t in tokens]
    best = 0
    for entry in lex.editing_terms:
        n = len(entry)
        if n > best and tuple(toks[:n]) == entry:
            best = n
    return best
