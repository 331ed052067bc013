"""Synthetic labeled corpora with planted term effects.

Ground truth for validating the detector: background sentences are uniform
draws from an artificial vocabulary (tok00000-style identifiers, never real
words), and each planted term is spliced contiguously into one sentence with
a per-group presence probability. Presence, not frequency, is planted,
because the statistic counts documents. Everything is deterministic for a
fixed seed.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace
from typing import Optional

from .cleanse import default_rules
from .corpus import Document, GroupScheme, default_group_scheme
from .pipeline import analyze_scope
from .stats import AnalysisConfig
from .textproc import tokenize

_TITLE_TOKENS = 3
_KEYWORD_COUNT = 2


@dataclass
class PlantedTerm:
    tokens: tuple[str, ...]
    probs: tuple[float, ...]    # per-group presence probability

    def __post_init__(self):
        self.tokens = tuple(self.tokens)
        self.probs = tuple(float(p) for p in self.probs)

    @property
    def rendered(self) -> str:
        return " ".join(self.tokens)

    @property
    def has_effect(self) -> bool:
        return len(set(self.probs)) > 1


@dataclass
class SyntheticSpec:
    """Generative description of a labeled corpus with planted effects."""

    group_sizes: tuple[int, ...]
    vocab_size: int
    sentences_per_doc: int
    tokens_per_sentence: int
    planted: list[PlantedTerm] = field(default_factory=list)
    token_inclusion_prob: float = 1.0   # per-slot chance a background token is kept
    seed: int = 0

    def __post_init__(self):
        self.group_sizes = tuple(int(n) for n in self.group_sizes)
        if any(n < 1 for n in self.group_sizes) or len(self.group_sizes) < 2:
            raise ValueError("need at least 2 groups with positive sizes")
        if self.vocab_size < 1:
            raise ValueError("vocab_size must be positive")
        if self.sentences_per_doc < 1 or self.tokens_per_sentence < 1:
            raise ValueError("sentence shape must be positive")
        if not 0.0 <= self.token_inclusion_prob <= 1.0:
            raise ValueError("token_inclusion_prob must be in [0, 1]")
        vocab = set(background_vocabulary(self.vocab_size))
        for term in self.planted:
            if len(term.probs) != len(self.group_sizes):
                raise ValueError(f"term {term.rendered!r}: need one probability per group")
            if any(not 0.0 <= p <= 1.0 for p in term.probs):
                raise ValueError(f"term {term.rendered!r}: probabilities must be in [0, 1]")
            if len(term.tokens) > self.tokens_per_sentence:
                raise ValueError(
                    f"term {term.rendered!r} is longer than a sentence ({self.tokens_per_sentence} tokens)"
                )
            if set(term.tokens) & vocab:
                raise ValueError(f"term {term.rendered!r} collides with the background vocabulary")
            if tuple(tokenize(term.rendered)) != term.tokens:
                raise ValueError(f"term {term.rendered!r} does not survive tokenization")

    def to_config(self) -> dict:
        return {
            "group_sizes": list(self.group_sizes),
            "vocab_size": self.vocab_size,
            "sentences_per_doc": self.sentences_per_doc,
            "tokens_per_sentence": self.tokens_per_sentence,
            "planted": [{"tokens": list(t.tokens), "probs": list(t.probs)} for t in self.planted],
            "token_inclusion_prob": self.token_inclusion_prob,
            "seed": self.seed,
        }

    @classmethod
    def from_config(cls, obj: dict) -> "SyntheticSpec":
        return cls(
            group_sizes=tuple(obj["group_sizes"]),
            vocab_size=int(obj["vocab_size"]),
            sentences_per_doc=int(obj["sentences_per_doc"]),
            tokens_per_sentence=int(obj["tokens_per_sentence"]),
            planted=[PlantedTerm(tuple(t["tokens"]), tuple(t["probs"])) for t in obj.get("planted", [])],
            token_inclusion_prob=float(obj.get("token_inclusion_prob", 1.0)),
            seed=int(obj.get("seed", 0)),
        )


def background_vocabulary(size: int) -> list[str]:
    return [f"tok{i:05d}" for i in range(size)]


def _capitalize(sentence: str) -> str:
    return sentence[0].upper() + sentence[1:] if sentence else sentence


def derive_seed(seed: int, index) -> int:
    digest = hashlib.sha256(f"{seed}|{index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def generate_corpus(spec: SyntheticSpec, scheme: Optional[GroupScheme] = None) -> list[Document]:
    """Generate the corpus described by the spec; byte-identical per seed.

    Documents carry raw scores cycled from each group's score set so the
    analysis scheme reconstructs exactly the intended groups. Every sentence
    starts uppercased, keeping the generator's sentence boundaries visible to
    the splitter.
    """
    scheme = scheme or default_group_scheme()
    if len(scheme.groups) != len(spec.group_sizes):
        raise ValueError("group_sizes must align with the group scheme")
    rng = random.Random(spec.seed)
    vocab = background_vocabulary(spec.vocab_size)
    docs = []
    doc_index = 0
    for g, size in enumerate(spec.group_sizes):
        scores = sorted(scheme.groups[g][1])
        for j in range(size):
            sentences: list[list[str]] = []
            for _ in range(spec.sentences_per_doc):
                tokens = []
                for _ in range(spec.tokens_per_sentence):
                    if spec.token_inclusion_prob >= 1.0 or rng.random() < spec.token_inclusion_prob:
                        tokens.append(rng.choice(vocab))
                sentences.append(tokens)
            for term in spec.planted:
                if rng.random() >= term.probs[g]:
                    continue
                fits = [s for s in sentences if len(s) >= len(term.tokens)]
                if fits:
                    target = fits[rng.randrange(len(fits))]
                    pos = rng.randrange(len(target) - len(term.tokens) + 1)
                    target[pos : pos + len(term.tokens)] = list(term.tokens)
                else:
                    sentences.append(list(term.tokens))
            title = " ".join(rng.choice(vocab) for _ in range(_TITLE_TOKENS))
            keywords = [rng.choice(vocab) for _ in range(_KEYWORD_COUNT)]
            abstract = ". ".join(_capitalize(" ".join(s)) for s in sentences if s) + "."
            ident = f"syn-{doc_index:05d}"
            docs.append(
                Document(
                    id=ident,
                    doi=f"10.9999/{ident}",
                    title=_capitalize(title),
                    journal="Journal of Synthetic Results",
                    abstract_raw=abstract,
                    keywords=keywords,
                    unit="1",
                    score=scores[j % len(scores)],
                    submitter="synthlab",
                )
            )
            doc_index += 1
    return docs


@dataclass
class DetectorMetrics:
    n_sims: int
    recall: Optional[float]         # None when the spec plants no effect terms
    fwer: float
    recall_per_sim: list[Optional[float]]
    false_positive_sims: int
    mean_m: float
    mean_threshold: Optional[float]

    def to_json_dict(self) -> dict:
        return {
            "n_sims": self.n_sims,
            "recall": self.recall,
            "fwer": self.fwer,
            "recall_per_sim": self.recall_per_sim,
            "false_positive_sims": self.false_positive_sims,
            "mean_m": self.mean_m,
            "mean_threshold": self.mean_threshold,
        }


def evaluate_detector(
    spec: SyntheticSpec,
    config: AnalysisConfig,
    n_sims: int,
    rules=None,
    min_abstract_chars: int = 0,
) -> DetectorMetrics:
    """Run the full pipeline over n_sims fresh corpora and score the detector.

    recall: fraction of planted effect terms flagged significant. fwer:
    fraction of simulations with at least one significant term made purely of
    background tokens (sub-phrases of a planted term share its tokens and are
    genuine detections, not false positives). Each simulation derives its own
    sub-seed from (spec seed, simulation index).

    Synthetic corpora control their own document shape, so the abstract length
    filter defaults to 0 here.
    """
    if n_sims < 1:
        raise ValueError(f"n_sims must be >= 1, got {n_sims}")
    if rules is None:
        rules = default_rules()
    effect_terms = [t.rendered for t in spec.planted if t.has_effect]
    planted_tokens = {tok for t in spec.planted for tok in t.tokens}

    recall_per_sim: list[Optional[float]] = []
    fp_sims = 0
    m_values = []
    thresholds = []
    for sim in range(n_sims):
        sim_spec = replace(spec, seed=derive_seed(spec.seed, sim))
        corpus = generate_corpus(sim_spec, config.group_scheme)
        outcome = analyze_scope(corpus, "all", config, rules, min_abstract_chars)
        if outcome.skipped:
            raise RuntimeError(f"simulation {sim} produced a degenerate corpus: {outcome.skipped}")
        significant = {r.term for r in outcome.results if r.significant}
        m_values.append(outcome.m)
        if outcome.threshold is not None:
            thresholds.append(outcome.threshold)
        if effect_terms:
            hits = sum(1 for t in effect_terms if t in significant)
            recall_per_sim.append(hits / len(effect_terms))
        else:
            recall_per_sim.append(None)
        has_fp = any(
            all(tok not in planted_tokens for tok in term.split(" ")) for term in significant
        )
        fp_sims += 1 if has_fp else 0

    observed = [r for r in recall_per_sim if r is not None]
    return DetectorMetrics(
        n_sims=n_sims,
        recall=sum(observed) / len(observed) if observed else None,
        fwer=fp_sims / n_sims,
        recall_per_sim=recall_per_sim,
        false_positive_sims=fp_sims,
        mean_m=sum(m_values) / len(m_values),
        mean_threshold=sum(thresholds) / len(thresholds) if thresholds else None,
    )
