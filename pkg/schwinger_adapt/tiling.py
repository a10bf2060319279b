"""
Bottom-up pools built from operators chosen on a small seed lattice.

Tiles are the Pauli strings ADAPT selects from the full odd-Y pool at
L = 2.  They are embedded at every offset of the target lattice
(tile_pauli), combined into charge-conserving sums (tile_Q) or summed
into translation-invariant volume and surface operators (tile_L).
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import null_space

from .exceptions import PoolConstructionError, TilingError
from .model import charge_operator
from .pauli import PauliString, PauliSum, PauliTerm, commutator
from .pools import OperatorPool, PoolOperator, PoolOptions, Tile
from .utils import cached

logger = logging.getLogger(__name__)

TILE_COEFFICIENT = 0.5
NULL_SPACE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SeedConfig:
    """Seed-lattice ADAPT runs used to harvest tiles"""

    preset: str = 'C'
    runs: int = 4
    tile_size: int = 2
    seed: int = 0
    epsilon: float = 1e-3
    max_iterations: int = 200
    lattice_spacing: float = 1.0


@cached(key_prefix='tiles')
def select_tiles(seed_config: SeedConfig) -> List[Tile]:
    """
    Run ADAPT with the full odd-Y Pauli pool on the seed lattice and collect
    every selected string, first occurrence kept.

    Raises:
        TilingError: If a seed run ends for any reason other than convergence
    """
    from .adapt import AdaptConfig, run_adapt

    tiles: List[Tile] = []
    seen = set()
    for run in range(seed_config.runs):
        config = AdaptConfig(
            pool_id='pauli_full',
            L=seed_config.tile_size,
            preset=seed_config.preset,
            epsilon=seed_config.epsilon,
            max_iterations=seed_config.max_iterations,
            tie_break_seed=seed_config.seed + run,
            lattice_spacing=seed_config.lattice_spacing,
        )
        trajectory = run_adapt(config)
        if trajectory.termination != 'converged':
            raise TilingError(f"seed run {run} ended with {trajectory.termination!r} "
                              f"after {len(trajectory.records) - 1} iterations")
        for step in trajectory.steps:
            string = step.operator.op.strings()[0]
            if string.label not in seen:
                seen.add(string.label)
                tiles.append(Tile(string, run=run, step=step.iteration))
        logger.info(f"Seed run {run}: {len(trajectory.steps)} steps, {len(tiles)} distinct tiles so far")
    return tiles


def _check_fits(tiles: List[Tile], L: int) -> int:
    if not tiles:
        raise PoolConstructionError("no tiles supplied")
    widths = {tile.width for tile in tiles}
    if len(widths) != 1:
        raise PoolConstructionError(f"tiles have mixed widths {sorted(widths)}")
    width = widths.pop()
    if 2 * L < width:
        raise PoolConstructionError(f"tiles of width {width} do not fit on {2 * L} qubits")
    return width


def _embedded(tile: Tile, n: int, offset: int) -> PauliSum:
    return PauliSum(n, [PauliTerm(TILE_COEFFICIENT, tile.string.embed(n, offset))])


def _span(strings: List[PauliString]) -> Tuple[int, int]:
    qubits = set()
    for s in strings:
        qubits |= s.support()
    return min(qubits), max(qubits) - min(qubits)


def tile_pool(tiles: List[Tile], L: int, options: Optional[PoolOptions] = None) -> OperatorPool:
    """One operator per (tile, offset) for every offset where the tile fits."""
    n = 2 * L
    width = _check_fits(tiles, L)
    operators = []
    for tile in tiles:
        for offset in range(n - width + 1):
            op = _embedded(tile, n, offset)
            lo, span = _span(op.strings())
            operators.append(PoolOperator(label=f"{tile.label}@{offset}", op=op, kind='local',
                                          distance=span, offset=lo, pool_id='tile_pauli'))
    return OperatorPool(pool_id='tile_pauli', L=L, operators=operators,
                        options=options or PoolOptions(), tiles=list(tiles))


def _commuting_subgroups(strings: List[PauliString]) -> List[List[PauliString]]:
    groups: List[List[PauliString]] = []
    for s in strings:
        for group in groups:
            if all(s.commutes_with(other) for other in group):
                group.append(s)
                break
        else:
            groups.append([s])
    return groups


def _rref(matrix: np.ndarray, tol: float = NULL_SPACE_TOLERANCE) -> Tuple[np.ndarray, List[int]]:
    """Reduced row-echelon form with partial pivoting; returns (rows, pivot columns)."""
    m = matrix.astype(float).copy()
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(m[r:, c])))
        if abs(m[p, c]) <= tol:
            continue
        m[[r, p]] = m[[p, r]]
        m[r] /= m[r, c]
        for other in range(rows):
            if other != r:
                m[other] -= m[other, c] * m[r]
        pivots.append(c)
        r += 1
    m[np.abs(m) <= tol] = 0.0
    return m[:r], pivots


def _canonical_basis(basis: np.ndarray) -> List[np.ndarray]:
    """
    Deterministic basis for a null space given column-wise: row-reduce,
    orthonormalize in pivot order, rescale each vector to unit l1 norm with
    a positive leading coefficient.
    """
    reduced, _ = _rref(basis.T)
    vectors: List[np.ndarray] = []
    for row in reduced:
        v = row.copy()
        for u in vectors:
            v = v - (u @ v) * u
        norm = np.linalg.norm(v)
        if norm > NULL_SPACE_TOLERANCE:
            vectors.append(v / norm)
    out = []
    for v in vectors:
        v = v.copy()
        v[np.abs(v) <= NULL_SPACE_TOLERANCE] = 0.0
        lead = v[np.flatnonzero(v)[0]]
        out.append(np.sign(lead) * v / np.abs(v).sum())
    return out


def _charge_null_space(strings: List[PauliString], charge: PauliSum) -> np.ndarray:
    """Columns span the real c with [sum_j c_j P_j, Q] = 0."""
    images = [commutator(PauliSum(s.n, [PauliTerm(1.0, s)]), charge) for s in strings]
    keys = sorted({k for image in images for k, _ in image.items()})
    row = {k: i for i, k in enumerate(keys)}
    if not keys:
        return np.eye(len(strings))
    a = np.zeros((len(keys), len(strings)), dtype=np.complex128)
    for j, image in enumerate(images):
        for k, c in image.items():
            a[row[k], j] = c
    return null_space(np.vstack([a.real, a.imag]), rcond=NULL_SPACE_TOLERANCE)


def synthesize_charge_conserving(tiles: List[Tile], L: int, options: Optional[PoolOptions] = None) -> OperatorPool:
    """
    Charge-conserving real combinations of embedded tiles.

    Embedded strings are grouped by flip pattern, each group is split into
    mutually commuting subgroups in label order, and every subgroup
    contributes a canonical basis of the null space of c -> [sum c_j P_j, Q].
    Subgroups with an empty null space are skipped.
    """
    n = 2 * L
    width = _check_fits(tiles, L)
    embedded = sorted({tile.string.embed(n, offset)
                       for tile in tiles for offset in range(n - width + 1)}, key=lambda s: s.label)
    charge = charge_operator(L)

    by_flip: Dict[int, List[PauliString]] = {}
    for s in embedded:
        by_flip.setdefault(s.x_mask, []).append(s)

    ordered_groups = []
    for flip in by_flip:
        for subgroup in _commuting_subgroups(by_flip[flip]):
            ordered_groups.append((_span(subgroup), subgroup))
    ordered_groups.sort(key=lambda item: (item[0][0], item[1][0].label))

    operators = []
    skipped = 0
    for (lo, span), subgroup in ordered_groups:
        basis = _charge_null_space(subgroup, charge)
        if basis.shape[1] == 0:
            skipped += 1
            continue
        for vector in _canonical_basis(basis):
            op = PauliSum(n, [PauliTerm(float(c), s) for c, s in zip(vector, subgroup) if c != 0.0])
            operators.append(PoolOperator(label=f"Q{len(operators)}", op=op, kind='local',
                                          distance=span, offset=lo, pool_id='tile_Q'))
    logger.debug(f"tile_Q at L={L}: {len(ordered_groups)} commuting groups, {skipped} without "
                 f"charge-conserving combinations, {len(operators)} operators")
    if not operators:
        raise PoolConstructionError(f"no charge-conserving combinations of the tiles at L={L}")
    return OperatorPool(pool_id='tile_Q', L=L, operators=operators,
                        options=options or PoolOptions(), tiles=list(tiles))


def tile_translation_invariant(tiles: List[Tile], L: int, options: Optional[PoolOptions] = None) -> OperatorPool:
    """
    Volume and surface sums of embedded tiles, one of each per tile and parity.

    Parity p in (1, 2) names the 1-based start site.  The volume sum covers
    0-based offsets p-1, p+1, ... while the tile fits; the surface pairs the
    offsets p-1 and N-w-(p-1), merging them when they coincide.

    Raises:
        PoolConstructionError: If no parity fits on the lattice
    """
    n = 2 * L
    width = _check_fits(tiles, L)
    last = n - width
    operators = []
    for tile in tiles:
        for p in (1, 2):
            first = p - 1
            if first > last:
                logger.warning(f"tile {tile.label} parity {p} does not fit on {n} qubits; skipped")
                continue
            volume = PauliSum.zero(n)
            for offset in range(first, last + 1, 2):
                volume = volume + _embedded(tile, n, offset)
            surface = _embedded(tile, n, first) + _embedded(tile, n, last - first)
            operators.append(PoolOperator(label=f"LV{p}[{tile.label}]", op=volume, kind='volume',
                                          distance=width - 1, offset=first, pool_id='tile_L'))
            operators.append(PoolOperator(label=f"LS{p}[{tile.label}]", op=surface, kind='surface',
                                          distance=width - 1, offset=first, pool_id='tile_L'))
    if not operators:
        raise PoolConstructionError(f"no tile parity fits on {n} qubits")
    return OperatorPool(pool_id='tile_L', L=L, operators=operators,
                        options=options or PoolOptions(), tiles=list(tiles))
