"""Line-level LCS diffing between two file versions.

The alignment is a longest common subsequence over exact line content,
computed with Hirschberg's divide-and-conquer so memory stays linear; the
row sweeps run through the kernel selected in _accel. Hunks keep positions,
so a diff can be re-applied to reconstruct the new content byte-for-byte.
"""
from __future__ import annotations

import numpy as np

from ._accel import lcs_last_row
from .models import DiffHunk, FileDiff


def split_lines(text: str) -> list[str]:
    """Split on newline characters; a trailing newline adds no empty line."""
    if text == "":
        return []
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def join_lines(lines: list[str]) -> str:
    """Inverse of split_lines for files that end with a newline."""
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


def _intern(old_lines: list[str], new_lines: list[str]) -> tuple[np.ndarray, np.ndarray]:
    ids: dict[str, int] = {}
    a = np.fromiter((ids.setdefault(l, len(ids)) for l in old_lines), dtype=np.int64, count=len(old_lines))
    b = np.fromiter((ids.setdefault(l, len(ids)) for l in new_lines), dtype=np.int64, count=len(new_lines))
    return a, b


def _pairs(a: np.ndarray, b: np.ndarray, a_off: int, b_off: int, out: list[tuple[int, int]]) -> None:
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        return
    if n == 1:
        hits = np.nonzero(b == a[0])[0]
        if hits.size:
            out.append((a_off, b_off + int(hits[0])))
        return
    mid = n // 2
    forward = lcs_last_row(np.ascontiguousarray(a[:mid]), b)
    backward = lcs_last_row(np.ascontiguousarray(a[mid:][::-1]), np.ascontiguousarray(b[::-1]))
    split = int(np.argmax(forward + backward[::-1]))
    _pairs(np.ascontiguousarray(a[:mid]), np.ascontiguousarray(b[:split]), a_off, b_off, out)
    _pairs(np.ascontiguousarray(a[mid:]), np.ascontiguousarray(b[split:]), a_off + mid, b_off + split, out)


def lcs_match_pairs(old_lines: list[str], new_lines: list[str]) -> list[tuple[int, int]]:
    """Indices (i, j) of one maximum-length alignment old[i] == new[j]."""
    # Common prefix/suffix always belong to some LCS; trimming them first
    # keeps the O(n*m) sweeps on the changed region only.
    n, m = len(old_lines), len(new_lines)
    pre = 0
    while pre < n and pre < m and old_lines[pre] == new_lines[pre]:
        pre += 1
    suf = 0
    while suf < n - pre and suf < m - pre and old_lines[n - 1 - suf] == new_lines[m - 1 - suf]:
        suf += 1
    pairs: list[tuple[int, int]] = [(i, i) for i in range(pre)]
    if n - pre - suf > 0 and m - pre - suf > 0:
        a, b = _intern(old_lines[pre:n - suf], new_lines[pre:m - suf])
        mid: list[tuple[int, int]] = []
        _pairs(a, b, 0, 0, mid)
        pairs.extend((i + pre, j + pre) for i, j in mid)
    pairs.extend((n - suf + k, m - suf + k) for k in range(suf))
    return pairs


def diff_lines(old_lines: list[str], new_lines: list[str]) -> list[DiffHunk]:
    """Positioned hunks turning old_lines into new_lines."""
    hunks: list[DiffHunk] = []
    oi = ni = 0
    for i, j in lcs_match_pairs(old_lines, new_lines) + [(len(old_lines), len(new_lines))]:
        if i > oi or j > ni:
            hunks.append(DiffHunk(
                old_start=oi,
                new_start=ni,
                removed=old_lines[oi:i],
                added=new_lines[ni:j],
            ))
        oi, ni = i + 1, j + 1
    return hunks


def apply_hunks(old_lines: list[str], hunks: list[DiffHunk]) -> list[str]:
    """Replay hunks over old_lines, producing the new content."""
    new: list[str] = []
    oi = 0
    for h in hunks:
        if h.old_start < oi:
            raise ValueError(f"overlapping hunk at old line {h.old_start}")
        new.extend(old_lines[oi:h.old_start])
        oi = h.old_start + len(h.removed)
        if old_lines[h.old_start:oi] != list(h.removed):
            raise ValueError(f"hunk at old line {h.old_start} does not match content")
        new.extend(h.added)
    new.extend(old_lines[oi:])
    return new


def apply_file_diff(old_lines: list[str] | None, diff: FileDiff) -> list[str] | None:
    """Apply one FileDiff; None means the file is absent on that side."""
    if diff.is_binary:
        raise ValueError(f"cannot replay binary diff for {diff.file_path}")
    if diff.deleted:
        return None
    return apply_hunks(old_lines if old_lines is not None else [], diff.hunks)


def compute_file_diff(old_content: str | None, new_content: str | None, path: str) -> FileDiff:
    """Line diff between two versions of one file; None means file absent."""
    if old_content is None and new_content is None:
        raise ValueError(f"no content on either side for {path}")

    if ("\x00" in (old_content or "")) or ("\x00" in (new_content or "")):
        old_len = len(old_content.encode("utf-8")) if old_content is not None else 0
        new_len = len(new_content.encode("utf-8")) if new_content is not None else 0
        return FileDiff(
            file_path=path,
            net_new_chars=max(0, new_len - old_len),
            created=old_content is None,
            deleted=new_content is None,
            is_binary=True,
        )

    old_lines = split_lines(old_content) if old_content is not None else []
    new_lines = split_lines(new_content) if new_content is not None else []
    hunks = diff_lines(old_lines, new_lines)
    added = [l for h in hunks for l in h.added]
    removed = [l for h in hunks for l in h.removed]
    return FileDiff(
        file_path=path,
        added_lines=added,
        removed_lines=removed,
        net_new_chars=max(0, sum(len(l) for l in added) - sum(len(l) for l in removed)),
        hunks=hunks,
        created=old_content is None,
        deleted=new_content is None,
    )
