import math

import pytest

from latrepair.lexicon import Lexicon
from latrepair.lm import train_trigram
from latrepair.pipeline import RepairModels
from latrepair.synth import SynthSpec, build_lexicon, generate_synthetic
from latrepair.training import train_models

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def lex():
    return Lexicon(
        pos_table={
            "thursday": {"NOUN": 1.0},
            "friday": {"NOUN": 1.0},
            "can": {"AUX": 0.9, "NOUN": 0.1},
            "cannot": {"AUX": 1.0},
            "i": {"PRON": 1.0},
            "you": {"PRON": 1.0},
            "meet": {"VERB": 1.0},
            "on": {"PREP": 1.0},
            "no": {"INTJ": 1.0},
            "uh": {"INTJ": 1.0},
        },
        sem_table={
            "thursday": "WEEKDAY", "friday": "WEEKDAY", "can": "MODAL", "cannot": "MODAL",
            "i": "PERSON", "you": "PERSON", "meet": "MEET", "on": "PREP", "no": "FILLER", "uh": "FILLER",
        },
    )


@pytest.fixture
def pos_lm():
    return train_trigram([["PRON", "AUX", "VERB"], ["PRON", "AUX"]])


@pytest.fixture(scope="session")
def synth_spec():
    return SynthSpec(seed=1)


@pytest.fixture(scope="session")
def synth_models(synth_spec):
    lex = build_lexicon(synth_spec)
    corpus = [t.gold for t in generate_synthetic(synth_spec, 3000)]
    bundle = train_models(corpus, lex, theta=-math.inf)
    return RepairModels.from_bundle(bundle, lex)
