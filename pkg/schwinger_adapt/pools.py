"""
Operator pools.

Top-down family: the charge-, Z-string- and coordinate-preserving LQZ pool
and its relaxations, named by three letters (L/x for coordinate invariance,
Q/x for charge conservation, Z/x for the Jordan-Wigner Z string).  The
bottom-up tiled family lives in tiling.py and is reached through build_pool.

Every pool operator is a Hermitian PauliSum O used as exp(-i theta O).
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

from .exceptions import PoolConstructionError, SerializationError
from .model import cp_conjugate
from .pauli import PauliString, PauliSum, PauliTerm
from .utils import validate_pool_id

logger = logging.getLogger(__name__)

TOPDOWN_POOLS = ('LQZ', 'LQx', 'LxZ', 'Lxx', 'xQZ', 'xQx', 'xxZ', 'xxx')
TILED_POOLS = ('tile_pauli', 'tile_Q', 'tile_L')
OPERATOR_KINDS = ('volume', 'surface', 'local')
FULL_PAULI_MAX_QUBITS = 8

# (coordinate invariant, charge conserving, Z strings kept); None = not applicable
POOL_FLAGS: Dict[str, Tuple[bool, bool, Optional[bool]]] = {
    'LQZ': (True, True, True),
    'LQx': (True, True, False),
    'LxZ': (True, False, True),
    'Lxx': (True, False, False),
    'xQZ': (False, True, True),
    'xQx': (False, True, False),
    'xxZ': (False, False, True),
    'xxx': (False, False, False),
    'tile_pauli': (False, False, None),
    'tile_Q': (False, True, None),
    'tile_L': (True, False, None),
    'pauli_full': (False, False, None),
}


@dataclass(frozen=True)
class PoolOptions:
    """Construction switches shared by all pools"""

    distances: str = 'odd'
    surface_mode: str = 'cp_paired'
    z_surface_swap: bool = False
    t_relax: bool = False
    tile_runs: int = 4
    tile_size: int = 2
    tile_seed: int = 0

    def __post_init__(self):
        if self.distances not in ('odd', 'all'):
            raise ValueError(f"distances must be 'odd' or 'all', got {self.distances!r}")
        if self.surface_mode not in ('cp_paired', 'separate'):
            raise ValueError(f"surface_mode must be 'cp_paired' or 'separate', got {self.surface_mode!r}")
        if self.tile_runs < 1 or self.tile_size < 1:
            raise ValueError("tile_runs and tile_size must be positive")

    def distance_set(self, L: int) -> List[int]:
        step = 2 if self.distances == 'odd' else 1
        return list(range(1, 2 * L, step))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'PoolOptions':
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown pool options: {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass(frozen=True)
class Tile:
    """Pauli string selected on the small seed lattice, with where it came from"""

    string: PauliString
    run: int = 0
    step: int = 0

    def __post_init__(self):
        if self.string.y_count % 2 != 1:
            raise ValueError(f"tile {self.string.label} must have an odd number of Y letters")

    @property
    def label(self) -> str:
        return self.string.label

    @property
    def width(self) -> int:
        return self.string.n


@dataclass(frozen=True)
class PoolOperator:
    """Hermitian generator tagged with its place in the pool"""

    label: str
    op: PauliSum
    kind: str = 'local'
    distance: int = 0
    offset: int = 0
    pool_id: str = ''
    cp_symmetric: bool = False
    serialization: str = field(default='', compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in OPERATOR_KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if not self.op.is_hermitian():
            raise PoolConstructionError(f"pool operator {self.label} is not Hermitian")
        object.__setattr__(self, 'serialization', self.op.to_text())

    @property
    def support(self) -> frozenset:
        return self.op.support()

    @property
    def n(self) -> int:
        return self.op.n


def _proportional_key(op: PauliSum) -> Tuple:
    """Key equal for operators that differ by a real factor."""
    terms = op.terms
    lead = terms[0].coeff
    return tuple((t.string.x_mask, t.string.z_mask, round((t.coeff / lead).real, 10)) for t in terms)


@dataclass
class OperatorPool:
    """Named catalog of pool operators"""

    pool_id: str
    L: int
    operators: List[PoolOperator]
    options: PoolOptions = field(default_factory=PoolOptions)
    tiles: List[Tile] = field(default_factory=list)

    def __post_init__(self):
        validate_pool_id(self.pool_id)
        distinct: List[PoolOperator] = []
        seen = set()
        for pool_op in self.operators:
            if pool_op.n != 2 * self.L:
                raise PoolConstructionError(f"operator {pool_op.label} acts on {pool_op.n} qubits, pool has L={self.L}")
            key = _proportional_key(pool_op.op)
            if key in seen:
                logger.debug(f"{self.pool_id}: dropping {pool_op.label}, proportional to an earlier operator")
                continue
            seen.add(key)
            distinct.append(pool_op)
        if not distinct:
            raise PoolConstructionError(f"pool {self.pool_id} at L={self.L} is empty")
        labels = [p.label for p in distinct]
        if len(set(labels)) != len(labels):
            raise PoolConstructionError(f"pool {self.pool_id} has duplicate operator labels")
        self.operators = distinct
        self._by_label = {p.label: p for p in distinct}

    def __len__(self) -> int:
        return len(self.operators)

    def __iter__(self) -> Iterator[PoolOperator]:
        return iter(self.operators)

    def get(self, label: str) -> Optional[PoolOperator]:
        return self._by_label.get(label)

    def __getitem__(self, label: str) -> PoolOperator:
        try:
            return self._by_label[label]
        except KeyError:
            raise KeyError(f"operator {label!r} not in pool {self.pool_id}")

    def labels(self) -> List[str]:
        return [p.label for p in self.operators]

    # -- text dump -------------------------------------------------------------

    def to_text(self) -> str:
        options = json.dumps(self.options.to_dict(), sort_keys=True, separators=(',', ':'))
        lines = [f"pool {self.pool_id} L={self.L} options={options}"]
        for tile in self.tiles:
            lines.append(f"# tile {tile.label} run={tile.run} step={tile.step}")
        for p in self.operators:
            lines.append(f"op {p.label} kind={p.kind} distance={p.distance} offset={p.offset} "
                         f"cp={int(p.cp_symmetric)}")
            lines.append(p.serialization)
            lines.append('')
        return '\n'.join(lines) + '\n'

    def dump(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_text())
        logger.info(f"Wrote pool {self.pool_id} (L={self.L}, {len(self)} operators) to {path}")
        return path

    @classmethod
    def from_text(cls, text: str) -> 'OperatorPool':
        """
        Parse a pool dump.

        Raises:
            SerializationError: On any malformed header, operator line or term line
        """
        lines = text.splitlines()
        if not lines or not lines[0].startswith('pool '):
            raise SerializationError("pool dump must start with a 'pool <id> L=<L> options=<...>' header")
        try:
            _, pool_id, l_field, options_field = lines[0].split(' ', 3)
            if not l_field.startswith('L=') or not options_field.startswith('options='):
                raise ValueError("bad header fields")
            L = int(l_field[2:])
            options = PoolOptions.from_dict(json.loads(options_field[len('options='):]))
        except ValueError as e:
            raise SerializationError(f"line 1: malformed pool header: {e}")

        tiles: List[Tile] = []
        blocks: List[Tuple[int, Dict[str, str], List[str]]] = []
        for lineno, raw in enumerate(lines[1:], 2):
            line = raw.strip()
            if line.startswith('# tile '):
                try:
                    parts = line.split()
                    fields = dict(part.split('=', 1) for part in parts[3:])
                    tiles.append(Tile(PauliString.from_label(parts[2]), int(fields['run']), int(fields['step'])))
                except (ValueError, KeyError, IndexError) as e:
                    raise SerializationError(f"line {lineno}: malformed tile comment: {e}")
            elif line.startswith('op '):
                parts = line.split()
                try:
                    meta = dict(part.split('=', 1) for part in parts[2:])
                except ValueError:
                    raise SerializationError(f"line {lineno}: malformed operator header")
                blocks.append((lineno, {'label': parts[1], **meta}, []))
            elif line and not line.startswith('#'):
                if not blocks:
                    raise SerializationError(f"line {lineno}: term line before any operator header")
                blocks[-1][2].append(line)

        operators = []
        for lineno, meta, body in blocks:
            try:
                op = PauliSum.from_text('\n'.join(body), n=2 * L)
                operators.append(PoolOperator(
                    label=meta['label'], op=op, kind=meta.get('kind', 'local'),
                    distance=int(meta.get('distance', 0)), offset=int(meta.get('offset', 0)),
                    pool_id=pool_id, cp_symmetric=meta.get('cp', '0') == '1',
                ))
            except SerializationError as e:
                raise SerializationError(f"operator at line {lineno}: {e}")
            except (ValueError, KeyError, PoolConstructionError) as e:
                raise SerializationError(f"operator at line {lineno}: {e}")
        try:
            return cls(pool_id=pool_id, L=L, operators=operators, options=options, tiles=tiles)
        except (ValueError, PoolConstructionError) as e:
            raise SerializationError(str(e))

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'OperatorPool':
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise SerializationError(f"cannot read pool file {path}: {e}")
        return cls.from_text(text)


# ========== Generators ==========

def _interior_mask(i: int, j: int) -> int:
    return ((1 << j) - 1) ^ ((1 << (i + 1)) - 1)


def _check_pair(i: int, d: int, L: int) -> int:
    n = 2 * L
    if d < 1 or i < 0 or i + d > n - 1:
        raise ValueError(f"invalid generator indices i={i}, d={d} for L={L}")
    return n


def generator(i: int, d: int, with_z: bool = True, L: int = 1) -> PauliSum:
    """
    G_d(i) = 1/2 (X_i Z...Z Y_{i+d} - Y_i Z...Z X_{i+d}).

    with_z=False drops the interior Z string.
    """
    n = _check_pair(i, d, L)
    j = i + d
    ends = (1 << i) | (1 << j)
    z = _interior_mask(i, j) if with_z else 0
    return PauliSum(n, [
        PauliTerm(0.5, PauliString(n, ends, z | (1 << j))),
        PauliTerm(-0.5, PauliString(n, ends, z | (1 << i))),
    ])


def exchange_generator(i: int, d: int, with_z: bool = True, L: int = 1) -> PauliSum:
    """1/2 (X_i Z...Z X_{i+d} + Y_i Z...Z Y_{i+d}): the time-reversal-even partner of G_d(i)."""
    n = _check_pair(i, d, L)
    j = i + d
    ends = (1 << i) | (1 << j)
    z = _interior_mask(i, j) if with_z else 0
    return PauliSum(n, [
        PauliTerm(0.5, PauliString(n, ends, z)),
        PauliTerm(0.5, PauliString(n, ends, z | ends)),
    ])


def split_halves(op: PauliSum) -> Tuple[PauliSum, PauliSum]:
    """Split a generator-type sum into its X...Y part and its Y...X part."""
    xy, yx = [], []
    for term in op.terms:
        s = term.string
        low = min(s.support())
        # the lowest qubit carries X in the X...Y half and Y in the Y...X half
        (yx if (s.z_mask >> low) & 1 else xy).append(term)
    return PauliSum(op.n, xy), PauliSum(op.n, yx)


def volume_operator(d: int, L: int, with_z: bool = True) -> PauliSum:
    """V_d = sum_i (-1)^i G_d(i) over every placement that fits."""
    n = 2 * L
    total = PauliSum.zero(n)
    for i in range(n - d):
        total = total + generator(i, d, with_z, L).scale((-1) ** i)
    return total


def cp_surface_sign(d: int, L: int, with_z: bool = True) -> int:
    """
    Sign s making G_d(0) + s G_d(2L-1-d) invariant under CP conjugation.

    Raises:
        PoolConstructionError: If neither sign gives a CP-symmetric pair
    """
    left = generator(0, d, with_z, L)
    right = generator(2 * L - 1 - d, d, with_z, L)
    for sign in (1, -1):
        paired = left + right.scale(sign)
        if cp_conjugate(paired).isclose(paired):
            return sign
    raise PoolConstructionError(f"no CP-symmetric surface pairing for d={d}, L={L}")


def _is_cp_symmetric(op: PauliSum) -> bool:
    return cp_conjugate(op).isclose(op)


def _surface_operators(d: int, L: int, with_z: bool, options: PoolOptions) -> List[Tuple[str, PauliSum, int]]:
    """(label suffix, operator, offset) for the boundary operators at distance d."""
    n = 2 * L
    right_offset = n - 1 - d
    left = generator(0, d, with_z, L)
    if right_offset == 0:
        return [('', left, 0)]
    right = generator(right_offset, d, with_z, L)
    if options.surface_mode == 'separate':
        return [('L', left, 0), ('R', right, right_offset)]
    return [('', left + right.scale(cp_surface_sign(d, L, with_z)), 0)]


def build_topdown_pool(pool_id: str, L: int, options: Optional[PoolOptions] = None) -> OperatorPool:
    """
    Build one of the eight top-down pools.

    Raises:
        PoolConstructionError: For an unknown pool id or an inapplicable option
    """
    options = options or PoolOptions()
    if pool_id not in TOPDOWN_POOLS:
        raise PoolConstructionError(f"{pool_id!r} is not a top-down pool; expected one of {TOPDOWN_POOLS}")
    if L < 1:
        raise PoolConstructionError(f"L must be at least 1, got {L}")
    if options.t_relax and pool_id not in ('xQZ', 'xQx'):
        raise PoolConstructionError("t_relax applies to the xQZ and xQx pools only")
    if options.z_surface_swap and pool_id not in ('LQx', 'Lxx'):
        raise PoolConstructionError("z_surface_swap applies to the LQx and Lxx pools only")

    coordinate_invariant, charge, with_z = POOL_FLAGS[pool_id]
    n = 2 * L
    operators: List[PoolOperator] = []

    def add(label: str, op: PauliSum, kind: str, d: int, offset: int) -> None:
        operators.append(PoolOperator(label=label, op=op, kind=kind, distance=d, offset=offset,
                                      pool_id=pool_id, cp_symmetric=_is_cp_symmetric(op)))

    def add_maybe_split(label: str, op: PauliSum, kind: str, d: int, offset: int) -> None:
        if charge:
            add(label, op, kind, d, offset)
            return
        xy, yx = split_halves(op)
        add(f"{label}:XY", xy, kind, d, offset)
        add(f"{label}:YX", yx, kind, d, offset)

    for d in options.distance_set(L):
        if coordinate_invariant:
            add_maybe_split(f"V{d}", volume_operator(d, L, with_z), 'volume', d, 0)
            surface_z = with_z or options.z_surface_swap
            for suffix, op, offset in _surface_operators(d, L, surface_z, options):
                add_maybe_split(f"S{d}{suffix}", op, 'surface', d, offset)
        else:
            for i in range(n - d):
                add_maybe_split(f"G{d}({i})", generator(i, d, with_z, L), 'local', d, i)
                if options.t_relax:
                    add(f"T{d}({i})", exchange_generator(i, d, with_z, L), 'local', d, i)

    pool = OperatorPool(pool_id=pool_id, L=L, operators=operators, options=options)
    logger.debug(f"Built {pool_id} pool at L={L}: {len(pool)} operators")
    return pool


def full_pauli_pool(L: int, options: Optional[PoolOptions] = None) -> OperatorPool:
    """
    Every Pauli string with an odd number of Y letters, coefficient 1/2.

    Raises:
        PoolConstructionError: Above 8 qubits
    """
    n = 2 * L
    if n > FULL_PAULI_MAX_QUBITS:
        raise PoolConstructionError(f"full Pauli pool limited to {FULL_PAULI_MAX_QUBITS} qubits, got {n}")
    operators = []
    for x in range(1 << n):
        for z in range(1 << n):
            s = PauliString(n, x, z)
            if s.y_count % 2 == 1:
                operators.append(PoolOperator(label=s.label, op=PauliSum(n, [PauliTerm(0.5, s)]),
                                              kind='local', offset=min(s.support()), pool_id='pauli_full'))
    operators.sort(key=lambda p: p.label)
    return OperatorPool(pool_id='pauli_full', L=L, operators=operators, options=options or PoolOptions())


def build_pool(pool_id: str, L: int, options: Optional[PoolOptions] = None,
               preset: str = 'C', tiles: Optional[List[Tile]] = None) -> OperatorPool:
    """
    Build any pool by id.

    Tiled pools select their tiles on the seed lattice of the given preset
    unless tiles are supplied.
    """
    validate_pool_id(pool_id)
    options = options or PoolOptions()
    if pool_id in TOPDOWN_POOLS:
        return build_topdown_pool(pool_id, L, options)
    if pool_id == 'pauli_full':
        return full_pauli_pool(L, options)

    from . import tiling

    if tiles is None:
        tiles = tiling.select_tiles(tiling.SeedConfig(preset=preset, runs=options.tile_runs,
                                                      tile_size=options.tile_size, seed=options.tile_seed))
    if pool_id == 'tile_pauli':
        return tiling.tile_pool(tiles, L, options)
    if pool_id == 'tile_Q':
        return tiling.synthesize_charge_conserving(tiles, L, options)
    return tiling.tile_translation_invariant(tiles, L, options)
