"""MovieLens rating ingestion, sparse triple storage, and seeded splits."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .numerics import derive_stream

RATING_MIN = 0.5
RATING_MAX = 5.0

CSV_HEADER = "userId,movieId,rating,timestamp"


class DataError(ValueError):
    """Bad rating data (parse failures, duplicates, invalid splits)."""


class ParseError(DataError):
    """A malformed input line; carries the 1-based line number."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class RatingTriple(NamedTuple):
    user_id: int
    item_id: int
    rating: float
    timestamp: int


def _check_rating(value, line_no):
    if not np.isfinite(value) or not (RATING_MIN <= value <= RATING_MAX):
        raise ParseError(
            f"rating {value!r} outside [{RATING_MIN}, {RATING_MAX}]", line_no
        )


def parse_tab(stream):
    """Parse tab-separated ``user item rating timestamp`` lines (u.data).

    Blank lines are skipped; any malformed line raises ParseError with its
    line number, and an input with no ratings at all is an error.
    """
    triples = []
    for line_no, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(fields)}", line_no)
        try:
            user = int(fields[0])
            item = int(fields[1])
            rating = float(fields[2])
            ts = int(fields[3])
        except ValueError:
            raise ParseError(f"could not parse fields {fields!r}", line_no) from None
        _check_rating(rating, line_no)
        triples.append(RatingTriple(user, item, rating, ts))
    if not triples:
        raise ParseError("empty input: no rating lines found")
    return triples


def parse_csv(stream):
    """Parse a ``ratings.csv`` file with the exact MovieLens header.

    The first line must be ``userId,movieId,rating,timestamp``; half-star
    ratings are preserved exactly.  A header with no data rows yields an
    empty list.
    """
    triples = []
    header_seen = False
    for line_no, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not header_seen:
            if line != CSV_HEADER:
                raise ParseError(f"expected header {CSV_HEADER!r}, got {line!r}", line_no)
            header_seen = True
            continue
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise ParseError(f"expected 4 comma-separated fields, got {len(fields)}", line_no)
        try:
            user = int(fields[0])
            item = int(fields[1])
            rating = float(fields[2])
            ts = int(fields[3])
        except ValueError:
            raise ParseError(f"could not parse fields {fields!r}", line_no) from None
        _check_rating(rating, line_no)
        triples.append(RatingTriple(user, item, rating, ts))
    if not header_seen:
        raise ParseError("empty input: missing header line")
    return triples


@dataclass
class SparseRatings:
    """Observed ratings as parallel triple arrays with per-user/item access.

    Dense user/item indices are assigned by order of first appearance.
    ``by_user[i]`` / ``by_item[j]`` hold the positions (into the triple
    arrays) of user i's / item j's ratings.  Instances are treated as
    immutable once built and are safe to share read-only.
    """

    n: int
    p: int
    user_index: np.ndarray  # (T,) dense user index per rating
    item_index: np.ndarray  # (T,) dense item index per rating
    rating: np.ndarray      # (T,) float64
    user_ids: np.ndarray    # dense index -> external id
    item_ids: np.ndarray
    user_map: dict          # external id -> dense index
    item_map: dict
    by_user: list           # n arrays of triple positions
    by_item: list           # p arrays of triple positions

    @property
    def size(self):
        """Number of observed ratings."""
        return int(self.rating.size)

    def triples(self):
        """Iterate (user_index, item_index, rating) tuples."""
        for u, i, r in zip(self.user_index, self.item_index, self.rating):
            yield int(u), int(i), float(r)

    def user_counts(self):
        return np.array([idx.size for idx in self.by_user])

    def item_counts(self):
        return np.array([idx.size for idx in self.by_item])


def _group_indices(index, size):
    """Positions of each group value 0..size-1, as a list of arrays."""
    order = np.argsort(index, kind="stable")
    counts = np.bincount(index, minlength=size)
    bounds = np.concatenate(([0], np.cumsum(counts)))
    return [order[bounds[g]:bounds[g + 1]] for g in range(size)]


def _first_appearance_ids(values):
    """Unique values in order of first appearance."""
    uniq, first = np.unique(values, return_index=True)
    return values[np.sort(first)], uniq.size


def build_sparse(triples):
    """Assemble parsed triples into a SparseRatings structure.

    Raises DataError naming the offending pair if any (user, item) rating
    is duplicated.
    """
    if not triples:
        raise DataError("cannot build sparse ratings from zero triples")
    ext_user = np.fromiter((t.user_id for t in triples), dtype=np.int64, count=len(triples))
    ext_item = np.fromiter((t.item_id for t in triples), dtype=np.int64, count=len(triples))
    rating = np.fromiter((t.rating for t in triples), dtype=np.float64, count=len(triples))

    user_ids, n = _first_appearance_ids(ext_user)
    item_ids, p = _first_appearance_ids(ext_item)
    user_map = {int(u): i for i, u in enumerate(user_ids)}
    item_map = {int(v): j for j, v in enumerate(item_ids)}
    user_index = np.fromiter((user_map[int(u)] for u in ext_user), dtype=np.int64, count=len(triples))
    item_index = np.fromiter((item_map[int(v)] for v in ext_item), dtype=np.int64, count=len(triples))

    pair = user_index * p + item_index
    uniq, counts = np.unique(pair, return_counts=True)
    if uniq.size != pair.size:
        dup = uniq[np.argmax(counts > 1)]
        du, di = divmod(int(dup), p)
        raise DataError(
            f"duplicate rating for user {int(user_ids[du])}, item {int(item_ids[di])}"
        )

    return SparseRatings(
        n=n,
        p=p,
        user_index=user_index,
        item_index=item_index,
        rating=rating,
        user_ids=user_ids,
        item_ids=item_ids,
        user_map=user_map,
        item_map=item_map,
        by_user=_group_indices(user_index, n),
        by_item=_group_indices(item_index, p),
    )


def _subset(data, keep):
    """SparseRatings over a subset of triples, keeping the full index space."""
    user_index = data.user_index[keep]
    item_index = data.item_index[keep]
    return SparseRatings(
        n=data.n,
        p=data.p,
        user_index=user_index,
        item_index=item_index,
        rating=data.rating[keep],
        user_ids=data.user_ids,
        item_ids=data.item_ids,
        user_map=data.user_map,
        item_map=data.item_map,
        by_user=_group_indices(user_index, data.n),
        by_item=_group_indices(item_index, data.p),
    )


@dataclass
class SplitPair:
    """A train/test partition of one SparseRatings instance.

    ``test`` is an (m, 3) array of (user_index, item_index, rating) rows in
    the train structure's index space; after cold-start repair every test
    user and item is guaranteed to appear in train.  ``test_mask`` flags
    the test rows in the original triple order.
    """

    train: SparseRatings
    test: np.ndarray
    test_mask: np.ndarray
    moved_to_train: int
    dropped: int


def split(data, test_fraction, seed):
    """Uniform random split of rating triples into train and test folds.

    Deterministic for a fixed seed.  Test pairs whose user or item would
    otherwise vanish from the train fold are moved back to train and
    counted in ``moved_to_train``.
    """
    if not (0.0 < test_fraction < 1.0):
        raise DataError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    total = data.size
    if total == 0:
        raise DataError("cannot split empty data")

    rng = derive_stream(seed, "split")
    n_test = int(test_fraction * total)
    perm = rng.permutation(total)
    test_mask = np.zeros(total, dtype=bool)
    test_mask[perm[:n_test]] = True

    # Cold-start repair: any user/item left with zero train ratings gets its
    # lowest-positioned test triple moved back to train.  Moves only ever add
    # to train, so one user pass followed by one item pass is stable.
    moved = 0
    for groups, in_group in ((data.by_user, data.n), (data.by_item, data.p)):
        for g in range(in_group):
            pos = groups[g]
            if pos.size and test_mask[pos].all():
                test_mask[pos[0]] = False
                moved += 1

    train = _subset(data, ~test_mask)
    test = np.column_stack(
        (
            data.user_index[test_mask].astype(np.float64),
            data.item_index[test_mask].astype(np.float64),
            data.rating[test_mask],
        )
    )
    return SplitPair(train=train, test=test, test_mask=test_mask, moved_to_train=moved, dropped=0)


def write_split_manifest(data, pair, path):
    """Write the fold assignment as ``user_id,item_id,rating,fold`` CSV."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("user_id,item_id,rating,fold\n")
        for t in range(data.size):
            fold = "test" if pair.test_mask[t] else "train"
            fh.write(
                f"{int(data.user_ids[data.user_index[t]])},"
                f"{int(data.item_ids[data.item_index[t]])},"
                f"{data.rating[t]:g},{fold}\n"
            )
