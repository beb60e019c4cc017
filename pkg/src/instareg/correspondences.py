"""Putative point matches and ordered collections of them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True, eq=False)
class Correspondence:
    """One putative (source point, target point) match with a stable id."""

    src: np.ndarray
    dst: np.ndarray
    id: int


class CorrespondenceSet:
    """Ordered correspondences backed by (n, 3) arrays with unique int ids.

    Instances are immutable; subset operations return new sets that keep the
    original ids, so members stay identifiable across pipeline iterations.
    """

    __slots__ = ("src", "dst", "ids", "_pos")

    def __init__(self, src, dst, ids=None):
        src = np.array(src, dtype=np.float64)
        dst = np.array(dst, dtype=np.float64)
        if src.ndim != 2 or src.shape[1] != 3 or src.shape != dst.shape:
            raise InvalidInput("src and dst must both be (n, 3) arrays of equal length")
        if not (np.all(np.isfinite(src)) and np.all(np.isfinite(dst))):
            raise InvalidInput("correspondence points must be finite")
        n = src.shape[0]
        if ids is None:
            ids = np.arange(n, dtype=np.int64)
        else:
            ids = np.array(ids, dtype=np.int64)
            if ids.shape != (n,):
                raise InvalidInput("ids must be one per correspondence")
            if np.unique(ids).size != n:
                raise InvalidInput("correspondence ids must be unique")
        for arr in (src, dst, ids):
            arr.setflags(write=False)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "_pos", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("CorrespondenceSet is immutable")

    def __len__(self) -> int:
        return self.src.shape[0]

    def __getitem__(self, index: int) -> Correspondence:
        return Correspondence(self.src[index], self.dst[index], int(self.ids[index]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def _positions(self) -> dict[int, int]:
        pos = self._pos
        if pos is None:
            pos = {int(v): i for i, v in enumerate(self.ids)}
            object.__setattr__(self, "_pos", pos)
        return pos

    def position_of(self, member_id: int) -> int:
        """Index of the member with the given id."""
        try:
            return self._positions()[int(member_id)]
        except KeyError:
            raise InvalidInput(f"id {member_id} not in set") from None

    def take(self, indices) -> "CorrespondenceSet":
        """Subset by positional indices, in the order given."""
        idx = np.asarray(indices, dtype=np.int64)
        return CorrespondenceSet(self.src[idx], self.dst[idx], self.ids[idx])

    def subset_by_ids(self, member_ids) -> "CorrespondenceSet":
        """Subset holding the given ids, in the order given."""
        idx = [self.position_of(i) for i in member_ids]
        return self.take(np.asarray(idx, dtype=np.int64))

    def without(self, member_ids) -> "CorrespondenceSet":
        """Drop the given ids, preserving the order of the survivors."""
        drop = np.asarray(list(member_ids), dtype=np.int64)
        keep = ~np.isin(self.ids, drop)
        return CorrespondenceSet(self.src[keep], self.dst[keep], self.ids[keep])
