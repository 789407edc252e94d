"""Vocabulary/concept universe and the sampling processes that generate
tasks, training sets, and test sentences.

Words and concepts are 1-based integer ids. Sentences and concept sequences
are plain int64 numpy arrays of length L; batches stack them along axis 0.
All randomness flows through numpy ``Generator`` objects built from
``SeedSequence`` so that (seed, stream key) fully determines every draw on
every platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO

import numpy as np

Sentence = np.ndarray  # shape (L,), int64, entries in 1..n_w
ConceptSequence = np.ndarray  # shape (L,), int64, entries in 1..n_c


@dataclass(frozen=True)
class ModelParams:
    """Instance parameters: sentence length, vocabulary and concept sizes,
    category count, samples per category, and unfamiliar samples per category.
    """

    L: int
    n_w: int
    n_c: int
    R: int
    n_spl: int
    n_star: int = 1

    def __post_init__(self) -> None:
        for name in ("L", "n_w", "n_c", "R", "n_spl", "n_star"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.n_w % self.n_c != 0:
            raise ValueError(
                f"n_c={self.n_c} does not divide n_w={self.n_w}; concepts must be equal-sized"
            )
        if self.n_star > self.n_spl:
            raise ValueError(
                f"n_star={self.n_star} exceeds samples per category n_spl={self.n_spl}"
            )

    @property
    def s_c(self) -> int:
        """Words per concept."""
        return self.n_w // self.n_c


def validate_params(
    L: int, n_w: int, n_c: int, R: int, n_spl: int, n_star: int = 1
) -> ModelParams:
    """Build ``ModelParams``, raising ``ValueError`` naming any violated invariant."""
    return ModelParams(L=L, n_w=n_w, n_c=n_c, R=R, n_spl=n_spl, n_star=n_star)


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """PCG64 generator for stream ``key`` under a master seed.

    Distinct keys give statistically independent streams, so parallel trials
    reproduce serial runs.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True, eq=False)
class Equipartition:
    """Assignment of the n_w words to n_c equal-sized concepts."""

    concept_of_word: np.ndarray  # shape (n_w + 1,); index 0 unused
    words_of_concept: np.ndarray  # shape (n_c, s_c)

    def concept(self, word: int) -> int:
        return int(self.concept_of_word[word])

    def words(self, concept: int) -> np.ndarray:
        return self.words_of_concept[concept - 1]

    def assignment(self) -> dict[int, int]:
        """Word id -> concept id mapping as a plain dict."""
        return {w: int(self.concept_of_word[w]) for w in range(1, len(self.concept_of_word))}

    def concepts_of(self, sentences: np.ndarray) -> np.ndarray:
        """Apply the word -> concept map elementwise (any array of word ids)."""
        return self.concept_of_word[sentences]


def sample_equipartition(params: ModelParams, rng: np.random.Generator) -> Equipartition:
    """Uniform draw over all equipartitions: shuffle the vocabulary and chop
    it into n_c consecutive blocks of s_c words."""
    perm = rng.permutation(params.n_w) + 1
    words_of = perm.reshape(params.n_c, params.s_c).astype(np.int64)
    concept_of = np.zeros(params.n_w + 1, dtype=np.int64)
    for c in range(params.n_c):
        concept_of[words_of[c]] = c + 1
    return Equipartition(concept_of_word=concept_of, words_of_concept=words_of)


@dataclass(frozen=True, eq=False)
class Task:
    """An equipartition plus R familiar and R unfamiliar concept sequences.

    Collisions between sequences are allowed; ground truth is always the
    generating category.
    """

    phi: Equipartition
    familiar: np.ndarray  # shape (R, L)
    unfamiliar: np.ndarray  # shape (R, L)

    @property
    def R(self) -> int:
        return self.familiar.shape[0]


def sample_task(params: ModelParams, rng: np.random.Generator) -> Task:
    """Uniform task: random equipartition and 2R i.i.d. uniform concept sequences."""
    phi = sample_equipartition(params, rng)
    familiar = rng.integers(1, params.n_c + 1, size=(params.R, params.L), dtype=np.int64)
    unfamiliar = rng.integers(1, params.n_c + 1, size=(params.R, params.L), dtype=np.int64)
    return Task(phi=phi, familiar=familiar, unfamiliar=unfamiliar)


def generate_sentence(
    phi: Equipartition, c: ConceptSequence, rng: np.random.Generator
) -> Sentence:
    """Sentence with each word drawn uniformly from the concept at its position."""
    s_c = phi.words_of_concept.shape[1]
    slots = rng.integers(0, s_c, size=len(c))
    return phi.words_of_concept[np.asarray(c) - 1, slots]


def generate_sentences(
    phi: Equipartition, cs: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Batch of sentences, one per concept-sequence row of ``cs``."""
    s_c = phi.words_of_concept.shape[1]
    slots = rng.integers(0, s_c, size=cs.shape)
    return phi.words_of_concept[cs - 1, slots]


@dataclass(eq=False)
class TrainingSet:
    """R x n_spl labelled sentences; within each category the first n_star
    slots are generated by the unfamiliar sequence, the rest by the familiar one.
    """

    sentences: np.ndarray  # shape (R, n_spl, L)
    n_star: int

    @property
    def R(self) -> int:
        return self.sentences.shape[0]

    @property
    def n_spl(self) -> int:
        return self.sentences.shape[1]

    def flat(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sentences (R*n_spl, L), category labels 1..R, unfamiliar flags 0/1)."""
        R, n_spl, L = self.sentences.shape
        X = self.sentences.reshape(R * n_spl, L)
        labels = np.repeat(np.arange(1, R + 1, dtype=np.int64), n_spl)
        slots = np.tile(np.arange(1, n_spl + 1, dtype=np.int64), R)
        flags = (slots <= self.n_star).astype(np.int64)
        return X, labels, flags


def sample_training_set(
    task: Task, params: ModelParams, rng: np.random.Generator
) -> TrainingSet:
    """Training set per the two-stage process: per category r, slots
    1..n_star from the unfamiliar sequence c'_r, slots n_star+1..n_spl from
    the familiar sequence c_r. ``n_star=1`` is the single-unfamiliar model."""
    R, L, n_spl, n_star = params.R, params.L, params.n_spl, params.n_star
    concepts = np.empty((R, n_spl, L), dtype=np.int64)
    concepts[:, :n_star, :] = task.unfamiliar[:, None, :]
    concepts[:, n_star:, :] = task.familiar[:, None, :]
    slots = rng.integers(0, params.s_c, size=(R, n_spl, L))
    sentences = task.phi.words_of_concept[concepts - 1, slots]
    return TrainingSet(sentences=sentences, n_star=n_star)


def sample_test_sentence(
    task: Task, category: int, rng: np.random.Generator
) -> Sentence:
    """One unseen sentence from the unfamiliar sequence of the given category."""
    if not (1 <= category <= task.R):
        raise ValueError(f"category {category} out of range 1..{task.R}")
    return generate_sentence(task.phi, task.unfamiliar[category - 1], rng)


def sample_test_set(
    task: Task, tests_per_category: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """(tests (R*tpc, L), labels): ``tests_per_category`` unfamiliar sentences
    per category, labelled by generating category."""
    R, L = task.unfamiliar.shape
    cs = np.repeat(task.unfamiliar, tests_per_category, axis=0)
    tests = generate_sentences(task.phi, cs, rng)
    labels = np.repeat(np.arange(1, R + 1, dtype=np.int64), tests_per_category)
    return tests, labels


@dataclass(frozen=True, eq=False)
class SdmInstance:
    """Draw from the simplified process: t+1 independent sequences, one point
    each, plus a test point sharing sequence 1."""

    phi: Equipartition
    sequences: np.ndarray  # shape (t+1, L)
    points: np.ndarray  # shape (t+1, L)
    test: Sentence

    @property
    def t(self) -> int:
        return self.sequences.shape[0] - 1


def sample_sdm(params: ModelParams, t: int, rng: np.random.Generator) -> SdmInstance:
    """Simplified sampling process with ``t`` distractor points."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    phi = sample_equipartition(params, rng)
    sequences = rng.integers(1, params.n_c + 1, size=(t + 1, params.L), dtype=np.int64)
    points = generate_sentences(phi, sequences, rng)
    test = generate_sentence(phi, sequences[0], rng)
    return SdmInstance(phi=phi, sequences=sequences, points=points, test=test)


def write_training_set(train: TrainingSet, fp: IO[str]) -> None:
    """Dump as text: one line per sentence, ``r s flag`` then the word ids,
    all space-separated."""
    R, n_spl, L = train.sentences.shape
    for r in range(1, R + 1):
        for s in range(1, n_spl + 1):
            flag = 1 if s <= train.n_star else 0
            words = " ".join(str(w) for w in train.sentences[r - 1, s - 1])
            fp.write(f"{r} {s} {flag} {words}\n")


def read_training_set(fp: IO[str]) -> TrainingSet:
    """Inverse of ``write_training_set``."""
    rows: dict[tuple[int, int], np.ndarray] = {}
    n_star = 0
    for line in fp:
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        r, s, flag = int(parts[0]), int(parts[1]), int(parts[2])
        rows[(r, s)] = np.array([int(w) for w in parts[3:]], dtype=np.int64)
        if flag:
            n_star = max(n_star, s)
    R = max(r for r, _ in rows)
    n_spl = max(s for _, s in rows)
    L = len(next(iter(rows.values())))
    sentences = np.zeros((R, n_spl, L), dtype=np.int64)
    for (r, s), words in rows.items():
        sentences[r - 1, s - 1] = words
    return TrainingSet(sentences=sentences, n_star=n_star)
