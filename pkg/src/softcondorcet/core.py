"""Preference profiles, pairwise count/margin matrices and Condorcet winners.

Alternatives are dense integer indices ``0..m-1``.  External labels, when
present, live in ``PreferenceProfile.names``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy import sparse

Ranking = tuple[int, ...]


class ProfileError(ValueError):
    """Raised for malformed votes or profiles."""


@dataclass(frozen=True)
class Vote:
    order: tuple[int, ...]
    multiplicity: int = 1

    def __post_init__(self):
        if len(self.order) == 0:
            raise ProfileError("empty vote")
        if len(set(self.order)) != len(self.order):
            raise ProfileError(f"duplicate id in vote {self.order}")
        if self.multiplicity <= 0:
            raise ProfileError(f"nonpositive multiplicity {self.multiplicity}")

    def __len__(self):
        return len(self.order)


@dataclass(frozen=True, eq=False)
class PreferenceProfile:
    """A weighted multiset of strict (possibly partial) rankings.

    Votes are kept in input order; identical orders are not merged.
    ``metadata`` carries PrefLib header lines so files round-trip verbatim.
    """

    num_alternatives: int
    votes: tuple[Vote, ...]
    names: tuple[str, ...] | None = None
    metadata: tuple[tuple[str, str], ...] = field(default=())

    def __post_init__(self):
        for v in self.votes:
            for a in v.order:
                if not 0 <= a < self.num_alternatives:
                    raise ProfileError(
                        f"alternative {a} outside 0..{self.num_alternatives - 1}"
                    )
        if self.names is not None:
            if len(self.names) != self.num_alternatives:
                raise ProfileError("names table does not match alternative count")
            if len(set(self.names)) != len(self.names):
                raise ProfileError("alternative names must be unique")

    @property
    def m(self) -> int:
        return self.num_alternatives

    @cached_property
    def multiplicities(self) -> np.ndarray:
        return np.array([v.multiplicity for v in self.votes], dtype=np.int64)

    @property
    def n(self) -> int:
        """Total vote weight."""
        return int(self.multiplicities.sum())

    @cached_property
    def pairs(self) -> "VotePairs":
        return VotePairs.from_votes(self.votes)

    def __len__(self):
        return len(self.votes)

    def __eq__(self, other):
        if not isinstance(other, PreferenceProfile):
            return NotImplemented
        return (
            self.num_alternatives == other.num_alternatives
            and self.votes == other.votes
            and self.names == other.names
        )

    def __hash__(self):
        return hash((self.num_alternatives, self.votes, self.names))

    def label(self, a: int) -> str:
        return self.names[a] if self.names is not None else str(a)

    def index(self, name: Hashable) -> int:
        if self.names is None:
            return int(name)
        return self.names.index(name)

    def with_votes(self, votes: Iterable[Vote]) -> "PreferenceProfile":
        """Same alternatives and names, different votes (metadata dropped)."""
        return PreferenceProfile(self.num_alternatives, tuple(votes), self.names)

    def expanded(self) -> list[Vote]:
        """One multiplicity-1 vote per underlying ballot."""
        out = []
        for v in self.votes:
            out.extend([Vote(v.order)] * v.multiplicity)
        return out


@dataclass(frozen=True, eq=False)
class VotePairs:
    """All ordered (winner, loser) position pairs of a vote list, CSR-style.

    Pairs of vote ``k`` occupy ``winners[offsets[k]:offsets[k+1]]``.
    """

    winners: np.ndarray
    losers: np.ndarray
    offsets: np.ndarray

    @classmethod
    def from_votes(cls, votes: Sequence[Vote]) -> "VotePairs":
        winners, losers = [], []
        counts = np.zeros(len(votes), dtype=np.int64)
        for k, v in enumerate(votes):
            L = len(v.order)
            i, j = np.triu_indices(L, 1)
            order = np.asarray(v.order, dtype=np.int64)
            winners.append(order[i])
            losers.append(order[j])
            counts[k] = len(i)
        offsets = np.zeros(len(votes) + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        if votes:
            w = np.concatenate(winners)
            l = np.concatenate(losers)
        else:
            w = l = np.zeros(0, dtype=np.int64)
        return cls(w, l, offsets)

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def select(self, vote_idx: np.ndarray) -> np.ndarray:
        """Pair indices belonging to ``vote_idx`` (with repetition, in order)."""
        vote_idx = np.asarray(vote_idx, dtype=np.int64)
        starts = self.offsets[vote_idx]
        width = self._uniform_width()
        if width is not None:
            return (starts[:, None] + np.arange(width)).ravel()
        lens = self.offsets[vote_idx + 1] - starts
        total = int(lens.sum())
        if total == 0:
            return np.zeros(0, dtype=np.int64)
        # position within each run, then shifted to the run's start
        run_start = np.repeat(np.cumsum(lens) - lens, lens)
        return np.repeat(starts, lens) + (np.arange(total) - run_start)

    def _uniform_width(self) -> int | None:
        """Pairs per vote when every vote has the same length, else None."""
        try:
            return self._width
        except AttributeError:
            c = self.counts
            w = int(c[0]) if len(c) and np.all(c == c[0]) else None
            object.__setattr__(self, "_width", w)
            return w

    def vote_of_pair(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.offsets) - 1), self.counts)


def build_profile(
    votes: Iterable[tuple[Sequence[Hashable], int]],
    alternatives: Sequence[Hashable] | int | None = None,
) -> PreferenceProfile:
    """Build a profile from ``(order, multiplicity)`` pairs.

    Orders may use integer ids or arbitrary labels.  ``alternatives`` fixes
    the registry: an int gives ``m`` for integer ids, a sequence gives the
    label order.  Otherwise labels are registered in order of appearance
    (integer ids register ``0..max``).
    """
    parsed = [(list(order), int(mult)) for order, mult in votes]

    labels = [a for order, _ in parsed for a in order]
    all_int = all(isinstance(a, (int, np.integer)) for a in labels)
    names = None
    if isinstance(alternatives, (int, np.integer)):
        m = int(alternatives)
        lookup = None
    elif alternatives is not None:
        names = tuple(str(a) for a in alternatives)
        lookup = {a: i for i, a in enumerate(alternatives)}
        m = len(names)
    elif all_int:
        m = int(max(labels)) + 1 if labels else 0
        lookup = None
    else:
        lookup = {}
        for a in labels:
            lookup.setdefault(a, len(lookup))
        names = tuple(str(a) for a in lookup)
        m = len(lookup)

    out = []
    for order, mult in parsed:
        if lookup is not None:
            try:
                ids = tuple(lookup[a] for a in order)
            except KeyError as exc:
                raise ProfileError(f"unregistered alternative {exc.args[0]!r}") from None
        else:
            ids = tuple(int(a) for a in order)
        out.append(Vote(ids, mult))
    return PreferenceProfile(m, tuple(out), names)


@dataclass(frozen=True)
class PairwiseCounts:
    """N(a, b): weighted number of votes ranking a strictly above b.

    Backed by a dense ndarray or a scipy CSR array; both answer the same
    queries.
    """

    matrix: np.ndarray | sparse.csr_array

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.matrix)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    def __getitem__(self, key: tuple[int, int]) -> int:
        a, b = key
        return int(self.matrix[a, b])

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def nonzero_pairs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, counts) for every ordered pair with N > 0."""
        if self.is_sparse:
            coo = self.matrix.tocoo()
            order = np.lexsort((coo.col, coo.row))
            return coo.row[order], coo.col[order], coo.data[order]
        r, c = np.nonzero(self.matrix)
        return r, c, self.matrix[r, c]


def preference_matrix(profile: PreferenceProfile, sparse_format: bool = False) -> PairwiseCounts:
    pairs = profile.pairs
    w = np.repeat(profile.multiplicities, pairs.counts)
    m = profile.m
    if sparse_format:
        mat = sparse.coo_array((w, (pairs.winners, pairs.losers)), shape=(m, m)).tocsr()
        mat.sum_duplicates()
        return PairwiseCounts(mat)
    counts = np.zeros((m, m), dtype=np.int64)
    np.add.at(counts, (pairs.winners, pairs.losers), w)
    return PairwiseCounts(counts)


def margin_matrix(counts: PairwiseCounts | np.ndarray):
    """M = N - N^T.  Sparse input gives sparse output."""
    if isinstance(counts, PairwiseCounts):
        counts = counts.matrix
    if sparse.issparse(counts):
        return (counts - counts.T).tocsr()
    counts = np.asarray(counts)
    return counts - counts.T


def condorcet_winner(margins) -> tuple[int | None, set[int]]:
    """Return ``(strong, weak)`` Condorcet winners from a margin matrix."""
    M = margins.toarray() if sparse.issparse(margins) else np.asarray(margins)
    m = M.shape[0]
    off = ~np.eye(m, dtype=bool)
    weak = {a for a in range(m) if np.all(M[a][off[a]] >= 0)}
    strong = [a for a in range(m) if np.all(M[a][off[a]] > 0)]
    return (strong[0] if strong else None), weak


def ranking_from_scores(scores: np.ndarray) -> Ranking:
    """Descending sort of scores, ties broken by ascending index."""
    scores = np.asarray(scores, dtype=float)
    return tuple(int(a) for a in np.lexsort((np.arange(len(scores)), -scores)))
