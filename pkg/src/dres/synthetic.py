"""Seeded synthetic dataset generators used by the experiment suite.

Two families:

* ``gaussian_blobs_dataset`` - well-separated class blobs rendered into
  several views; the "clean" setting where every method should do well.

* ``two_region_dataset`` - the engineered two-view construction: instances
  split into two regions, and each view is easy for exactly one region while
  rendering the other as a label-alternating checkerboard lattice (kDN ~ 0.8
  at k=5) woven around the easy structures. Per-query view selection is
  required to do well; no fixed view can.

The easy-region geometry has three strata, all at ~80% local label purity
except the small pockets:

* plain blobs - locally majority-consistent, every classifier kind right;
* a ring of pocket islands beyond the blobs - locally majority-consistent
  but positioned so global parametric models extrapolate the wrong way;
* a ring of much smaller pure islands - only small-neighborhood methods
  resolve them, so per-query classifier selection has distinct work to do.

The shared ~0.8 purity matches the lattice's ~0.8 disagreement, so a
classifier's output confidence alone does not reveal which view is the easy
one; the label-signed kDN statistic does.
"""

import numpy as np

from .data import MultiViewDataset, ViewMatrix, assemble_dataset


def gaussian_blobs_dataset(n_per_class: int = 40, num_classes: int = 2,
                           num_views: int = 2, dim: int = 2,
                           separation: float = 6.0, noise: float = 1.0,
                           seed: int = 0) -> MultiViewDataset:
    """Same instances rendered in ``num_views`` independent blob layouts."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xB10B]))
    n = n_per_class * num_classes
    labels = np.repeat(np.arange(num_classes), n_per_class)
    perm = rng.permutation(n)
    labels = labels[perm]
    views = []
    for v in range(num_views):
        centers = rng.normal(0.0, separation, size=(num_classes, dim))
        data = centers[labels] + rng.normal(0.0, noise, size=(n, dim))
        views.append(ViewMatrix(name=f"view_{v}", data=data))
    return assemble_dataset(views, labels)


_BLOB_CENTERS = np.array([[0.0, 0.0], [10.0, 10.0]])
_POCKET_RING_CENTER = np.array([26.0, 26.0])
_POCKET_RING_RADIUS = 7.0
_POCKET_ISLANDS = 8
_SMALL_RING_CENTER = np.array([-8.0, 24.0])
_SMALL_RING_RADIUS = 7.0
_SMALL_ISLANDS = 16
_SMALL_ISLAND_POP = 8
_RARE_CENTERS = np.array([[36.0, -2.0], [-2.0, 38.0]])


def _ring_centers(rng, center, radius, count, jitter=0.5):
    angles = 2.0 * np.pi * np.arange(count) / count
    centers = center + radius * np.column_stack([np.cos(angles), np.sin(angles)])
    return centers + rng.uniform(-jitter, jitter, size=centers.shape)


def _scatter_majority_minority(rng, rows, labels, centers_for, sigma, purity):
    """Place ``purity`` of each label's rows at its own sites and the rest at
    the opposite label's sites; returns the positions."""
    pts = np.empty((len(rows), 2))
    for lab in (0, 1):
        local = np.flatnonzero(labels == lab)
        local = local[rng.permutation(len(local))]
        n_min = int(round(len(local) * (1.0 - purity)))
        minority, majority = local[:n_min], local[n_min:]
        own, other = centers_for(lab), centers_for(1 - lab)
        which = np.arange(len(majority)) % len(own)
        pts[majority] = own[which] + rng.normal(0.0, sigma, size=(len(majority), 2))
        which = np.arange(len(minority)) % len(other)
        pts[minority] = other[which] + rng.normal(0.0, sigma, size=(len(minority), 2))
    return pts


def _easy_geometry(rng, labels, stratum, purity):
    """Render easy-region rows per stratum: 0 plain, 1 pocket ring, 2 small
    pure islands, 3 rare-class clusters."""
    pts = np.empty((len(labels), 2))

    rows = np.flatnonzero(stratum == 0)
    pts[rows] = _scatter_majority_minority(
        rng, rows, labels[rows],
        lambda lab: _BLOB_CENTERS[lab][None, :], 0.6, purity)

    pocket = _ring_centers(rng, _POCKET_RING_CENTER, _POCKET_RING_RADIUS,
                           _POCKET_ISLANDS)
    pocket_labels = np.arange(_POCKET_ISLANDS) % 2
    rows = np.flatnonzero(stratum == 1)
    pts[rows] = _scatter_majority_minority(
        rng, rows, labels[rows],
        lambda lab: pocket[pocket_labels == lab], 0.35, purity)

    small = _ring_centers(rng, _SMALL_RING_CENTER, _SMALL_RING_RADIUS,
                          _SMALL_ISLANDS, jitter=0.4)
    small_labels = np.arange(_SMALL_ISLANDS) % 2
    rows = np.flatnonzero(stratum == 2)
    for lab in (0, 1):
        local = rows[labels[rows] == lab]
        own = small[small_labels == lab]
        which = np.arange(len(local)) % len(own)
        pts[local] = own[which] + rng.normal(0.0, 0.3, size=(len(local), 2))

    rows = np.flatnonzero(stratum == 3)
    which = np.arange(len(rows)) % 2
    pts[rows] = _RARE_CENTERS[which] + rng.normal(0.0, 0.4, size=(len(rows), 2))
    return pts


def _lattice_cells(count, spacing):
    """Checkerboard cells surrounding the easy structures, keeping clear of
    every easy site so neighborhoods never mix."""
    keep_out = [
        (_BLOB_CENTERS[0], 4.5), (_BLOB_CENTERS[1], 4.5),
        (_POCKET_RING_CENTER, _POCKET_RING_RADIUS + 4.0),
        (_SMALL_RING_CENTER, _SMALL_RING_RADIUS + 4.0),
        (_RARE_CENTERS[0], 4.0), (_RARE_CENTERS[1], 4.0),
    ]
    side = 3
    while True:
        lo = 13 - 3 * side // 2
        coords = [(lo + i * spacing, lo + j * spacing, (i + j) % 2)
                  for i in range(side) for j in range(side)]
        cells = [
            (x, y, par) for x, y, par in coords
            if all(np.hypot(c[0] - x, c[1] - y) > r for c, r in keep_out)
        ]
        even = sum(1 for c in cells if c[2] == 0)
        odd = len(cells) - even
        if 2 * min(even, odd) >= count + 2:
            return cells
        side += 2


_DECOY_OFFSETS = np.array([[3.2, -1.2], [-3.2, 1.2]])  # beside each blob


def _hard_geometry(rng, labels, collapse_fraction, collapse_purity,
                   spacing: float = 3.0):
    """Bad-view rendering of a region: most instances go to the checkerboard
    lattice (binary labels alternate with cell parity, kDN ~ 0.8 at k=5;
    the rare class sits at cell midpoints, fully surrounded by disagreement).

    A ``collapse_fraction`` of the binary instances instead lands in two
    decoy clusters beside the blobs: each decoy is dominated by the blob's
    label, so every classifier kind is confidently wrong on the minority
    instances hidden there."""
    n = len(labels)
    pts = np.empty((n, 2))
    decoys = _BLOB_CENTERS + _DECOY_OFFSETS

    collapse_rows = []
    lattice_rows = np.ones(n, dtype=bool)
    for lab in (0, 1):
        rows = np.flatnonzero(labels == lab)
        rows = rows[rng.permutation(len(rows))]
        n_col = int(round(len(rows) * collapse_fraction))
        chosen = rows[:n_col]
        lattice_rows[chosen] = False
        n_min = int(round(n_col * (1.0 - collapse_purity)))
        # majority of label lab sits at decoy lab; the minority hides at the
        # other decoy, deep inside the wrong label's confident zone
        pts[chosen[n_min:]] = decoys[lab] + rng.normal(0.0, 0.35,
                                                       size=(n_col - n_min, 2))
        pts[chosen[:n_min]] = decoys[1 - lab] + rng.normal(0.0, 0.35,
                                                           size=(n_min, 2))
        collapse_rows.extend(chosen.tolist())

    lat = np.flatnonzero(lattice_rows)
    lat_labels = labels[lat]
    n_major = int((lat_labels < 2).sum())
    cells = _lattice_cells(n_major, spacing)
    even = [(x, y) for x, y, par in cells if par == 0]
    odd = [(x, y) for x, y, par in cells if par == 1]
    lat_pts = np.empty((len(lat), 2))
    for lab, pool in ((0, even), (1, odd)):
        rows = np.flatnonzero(lat_labels == lab)
        for r, (x, y) in zip(rows, pool):
            lat_pts[r] = (x, y)
    rare = np.flatnonzero(lat_labels == 2)
    if len(rare):
        used = even[:int((lat_labels == 0).sum())] + odd[:int((lat_labels == 1).sum())]
        hosts = rng.choice(len(used), size=len(rare), replace=len(rare) > len(used))
        offsets = np.array([[0.5, 0.5], [-0.5, 0.5], [0.5, -0.5], [-0.5, -0.5]])
        pick = rng.integers(0, 4, size=len(rare))
        lat_pts[rare] = np.asarray(used)[hosts] + offsets[pick] * spacing
    pts[lat] = lat_pts
    pts += rng.uniform(-0.15, 0.15, size=(n, 2))
    return pts


def two_region_dataset(n_instances: int = 1200, xor_fraction: float = 0.3,
                       purity: float = 0.9, rare_fraction: float = 0.1,
                       collapse_fraction: float = 0.4,
                       collapse_purity: float = 0.8,
                       seed: int = 0) -> MultiViewDataset:
    """Two balanced regions, two views, a rare third class; each view renders
    one region's easy geometry (plain + pocket ring + small islands + rare
    clusters) and the other region adversarially (lattice + decoy collapses)."""
    if n_instances < 400:
        raise ValueError("need at least 400 instances for stable region structure")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x2E6]))
    half = n_instances // 2
    n = 2 * half

    n_rare = int(round(half * rare_fraction))
    n_rare -= n_rare % 2
    n_major = half - n_rare

    def region_labels():
        return np.concatenate([
            np.tile([0, 1], n_major // 2 + 1)[:n_major],
            np.full(n_rare, 2, dtype=np.int64),
        ])

    region = np.concatenate([np.zeros(half, dtype=np.int64),
                             np.ones(half, dtype=np.int64)])
    labels = np.concatenate([region_labels(), region_labels()])
    perm = rng.permutation(n)
    region, labels = region[perm], labels[perm]

    n_small = _SMALL_ISLANDS * _SMALL_ISLAND_POP
    view_data = []
    for v in range(2):
        pts = np.empty((n, 2))
        easy_rows = np.flatnonzero(region == v)
        hard_rows = np.flatnonzero(region != v)
        easy_labels = labels[easy_rows]
        stratum = np.zeros(len(easy_rows), dtype=np.int64)
        stratum[easy_labels == 2] = 3
        for lab in (0, 1):
            rows = np.flatnonzero(easy_labels == lab)
            rows = rows[rng.permutation(len(rows))]
            n_pocket = int(round(len(rows) * xor_fraction))
            stratum[rows[:n_pocket]] = 1
            stratum[rows[n_pocket:n_pocket + n_small // 2]] = 2
        pts[easy_rows] = _easy_geometry(rng, easy_labels, stratum, purity)
        pts[hard_rows] = _hard_geometry(rng, labels[hard_rows],
                                        collapse_fraction, collapse_purity)
        view_data.append(ViewMatrix(name=f"view_{v}", data=pts))
    return assemble_dataset(view_data, labels)
