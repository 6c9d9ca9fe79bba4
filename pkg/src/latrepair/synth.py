"""Synthetic appointment-scheduling turns with planted modification repairs.

Fluent sentences come from slot templates.  With probability
``repair_rate`` a turn receives one repair: a reparans span of 1-4 words is
chosen, a reparandum is derived from it by same-class substitutions
(occasionally shortened, lengthened or cut off as a fragment), an editing
term may follow, and the reparandum's last word gets a high IP probability.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .lattice import format_token
from .lexicon import DEFAULT_EDITING_TERMS, Lexicon
from .training import AnnotatedTurn, RepairAnnotation

# word -> (POS distribution, semantic class)
DEFAULT_VOCABULARY: dict[str, tuple[dict[str, float], str]] = {}


def _add(cls: str, pos, words: str) -> None:
    for w in words.split():
        DEFAULT_VOCABULARY[w] = (dict(pos) if isinstance(pos, dict) else {pos: 1.0}, cls)


_add("WEEKDAY", "NOUN", "monday tuesday wednesday thursday friday saturday sunday")
_add("MONTH", "NOUN", "january february march april may june july august september october november december")
_add("NUMBER", "NUM", "one two three four five six seven eight nine ten eleven twelve")
_add("ORDINAL", "ADJ", "first second third fourth fifth sixth tenth twentieth")
_add("DAYTIME", "NOUN", "morning afternoon evening night")
_add("PLACE", "NOUN", "office station airport hotel restaurant")
_add("MEET", "VERB", "meet see visit call")
_add("MOVE", "VERB", "go fly drive travel leave")
_add("PERSON", "PRON", "i we you they")
_add("MODAL", "AUX", "could will should must would")
_add("MODAL", {"AUX": 0.9, "NOUN": 0.1}, "can")
_add("MODAL", "AUX", "cannot")
_add("PREP_TIME", "PREP", "on at in before after until from")
_add("PREP_DIR", {"PREP": 0.7, "PART": 0.3}, "to")
_add("PREP_MISC", "PREP", "of about for with")
_add("DET", "DET", "the a this next")
_add("DET", {"DET": 0.6, "PRON": 0.4}, "that")
_add("DAYREL", "ADV", "today tomorrow")
_add("ANSWER", "INTJ", "yes okay fine sure")
_add("FILLER", "INTJ", "uh uhm well no")
_add("OBJ", "PRON", "me us")
_add("COPULA", "VERB", "is")
_add("QUEST", "ADV", "how what")
_add("EVAL", "ADJ", "good bad")
_add("TRANSPORT", "NOUN", "train flight bus")
_add("EVENT", "NOUN", "meeting appointment")
_add("ACT", "VERB", "let take like mean")
_add("CLOCK", "NOUN", "o'clock")
_add("NEG", "ADV", "not")

DEFAULT_TEMPLATES = [
    "{PERSON} {MODAL} {MEET} you on {WEEKDAY} at {NUMBER}",
    "how about {WEEKDAY} the {ORDINAL} of {MONTH}",
    "let us {MEET} on {WEEKDAY} {DAYTIME}",
    "{PERSON} would like to {MOVE} to the {PLACE} on {WEEKDAY}",
    "{WEEKDAY} is good for me",
    "{PERSON} {MODAL} not {MEET} you before {NUMBER} o'clock",
    "the {EVENT} is in the {PLACE} at {NUMBER}",
    "{ANSWER} that is fine",
    "we {MODAL} take the {TRANSPORT} at {NUMBER} in the {DAYTIME}",
    "{DAYREL} {PERSON} {MODAL} {MOVE} to the {PLACE}",
    "what about the {ORDINAL} of {MONTH}",
    "{PERSON} {MODAL} {MEET} you from {NUMBER} to {NUMBER}",
    "the {TRANSPORT} {MODAL} leave {DAYREL} {DAYTIME}",
    "{ANSWER} {WEEKDAY} the {ORDINAL} is good",
]


@dataclass
class SynthSpec:
    vocabulary: dict = field(default_factory=lambda: {w: [dict(p), c] for w, (p, c) in DEFAULT_VOCABULARY.items()})
    templates: list = field(default_factory=lambda: list(DEFAULT_TEMPLATES))
    editing_terms: list = field(default_factory=lambda: [" ".join(e) for e in DEFAULT_EDITING_TERMS])
    repair_rate: float = 0.21
    editing_prob: float = 0.4
    keep_prob: float = 0.45
    shorten_prob: float = 0.1
    extend_prob: float = 0.08
    fragment_prob: float = 0.12
    span_weights: list = field(default_factory=lambda: [0.4, 0.3, 0.2, 0.1])
    sentences_per_turn: list = field(default_factory=lambda: [1, 2])
    min_words: int = 0
    ip_hit_prob: float = 0.8
    false_alarm_rate: float = 0.03
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.repair_rate <= 1.0):
            raise ValueError(f"repair_rate must lie in [0, 1], got {self.repair_rate}")
        if not self.vocabulary or not self.templates:
            raise ValueError("synthetic spec needs a vocabulary and at least one template")

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "SynthSpec":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        obj.update(overrides)
        return cls(**obj)

    def to_dict(self) -> dict:
        return asdict(self)


def build_lexicon(spec: SynthSpec) -> Lexicon:
    return Lexicon(
        pos_table={w: pos for w, (pos, _) in spec.vocabulary.items()},
        sem_table={w: cls for w, (_, cls) in spec.vocabulary.items()},
        editing_terms=list(spec.editing_terms),
    )


@dataclass
class SynthTurn:
    gold: AnnotatedTurn
    ip_probs: list[float]
    fragments: list[bool]

    def transliteration(self) -> str:
        toks = [format_token(w, p, f) for w, p, f in zip(self.gold.tokens, self.ip_probs, self.fragments)]
        return f"{self.gold.turn_id}\t{' '.join(toks)}"

    def oracle_tokens(self) -> list[str]:
        """Tokens with ip=1.0 on gold interruption points and no other annotation."""
        ips = {r.ip for r in self.gold.repairs}
        return [format_token(w, 1.0 if k in ips else 0.0) for k, w in enumerate(self.gold.tokens)]


class Generator:
    def __init__(self, spec: SynthSpec):
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.by_class: dict[str, list[str]] = {}
        for w, (_, c) in sorted(spec.vocabulary.items()):
            self.by_class.setdefault(c, []).append(w)
        self.editing = [e.split() for e in spec.editing_terms]
        filler = {w for e in self.editing for w in e}
        self.words = sorted(w for w in spec.vocabulary if w not in filler)

    def sentence(self) -> list[str]:
        tmpl = self.rng.choice(self.spec.templates)
        out = []
        for piece in tmpl.split():
            if piece.startswith("{") and piece.endswith("}"):
                out.append(self.rng.choice(self.by_class[piece[1:-1]]))
            else:
                out.append(piece)
        return out

    def fluent_turn(self) -> list[str]:
        lo, hi = self.spec.sentences_per_turn
        toks: list[str] = []
        for _ in range(self.rng.randint(lo, hi)):
            toks += self.sentence()
        while len(toks) < self.spec.min_words:
            toks += self.sentence()
        return toks

    def _substitute(self, word: str) -> str:
        if self.rng.random() < self.spec.keep_prob or word not in self.spec.vocabulary:
            return word
        cls = self.spec.vocabulary[word][1]
        others = [w for w in self.by_class.get(cls, []) if w != word]
        return self.rng.choice(others) if others else word

    def plant(self, toks: list[str]):
        sp = self.spec
        l = self.rng.choices(range(1, len(sp.span_weights) + 1), weights=sp.span_weights)[0]
        l = min(l, len(toks))
        s = self.rng.randint(0, len(toks) - l)
        rs = toks[s:s + l]
        rd = [self._substitute(w) for w in rs]
        links = [(j, j) for j in range(1, l + 1)]
        u = self.rng.random()
        if u < sp.shorten_prob and l >= 2:
            rd = rd[:-1]
            links = links[:-1]
        elif u < sp.shorten_prob + sp.extend_prob and l < len(sp.span_weights):
            pos = self.rng.randint(0, len(rd))
            rd.insert(pos, self.rng.choice(self.words))
            links = [(j, j if j <= pos else j - 1) for j in range(1, len(rd) + 1)]
            links[pos] = (pos + 1, 0)
        fragment = False
        last = rd[-1]
        if self.rng.random() < sp.fragment_prob and len(last) >= 4:
            rd[-1] = last[: max(2, len(last) // 2)] + "-"
            fragment = True
        et = self.rng.choice(self.editing) if self.rng.random() < sp.editing_prob else []
        m, e = len(rd), len(et)
        tokens = toks[:s] + rd + et + toks[s:]
        ann = RepairAnnotation(
            reparandum=(s, s + m),
            editing_term=(s + m, s + m + e) if e else None,
            reparans=(s + m + e, s + m + e + l),
            links=tuple(links),
        )
        return tokens, ann, fragment

    def turn(self, turn_id: str) -> SynthTurn:
        sp = self.spec
        toks = self.fluent_turn()
        repairs = []
        frag_at = None
        if self.rng.random() < sp.repair_rate:
            toks, ann, fragment = self.plant(toks)
            repairs.append(ann)
            if fragment:
                frag_at = ann.ip
        ips = []
        for k in range(len(toks)):
            if repairs and k == repairs[0].ip:
                hit = self.rng.random() < sp.ip_hit_prob
                ips.append(round(self.rng.uniform(0.55, 1.0) if hit else self.rng.uniform(0.05, 0.45), 2))
            elif self.rng.random() < sp.false_alarm_rate:
                ips.append(round(self.rng.uniform(0.5, 0.9), 2))
            else:
                ips.append(round(self.rng.uniform(0.0, 0.3), 2))
        frags = [k == frag_at for k in range(len(toks))]
        gold = AnnotatedTurn(turn_id, toks, repairs).validate()
        return SynthTurn(gold, ips, frags)


def generate_synthetic(spec: SynthSpec, n_turns: int, prefix: str = "syn") -> list[SynthTurn]:
    """``n_turns`` turns, reproducible under ``spec.seed``."""
    gen = Generator(spec)
    return [gen.turn(f"{prefix}{k:06d}") for k in range(n_turns)]
