"""
Command-line interface for schwinger_adapt.

Verbs: run, tables, verify, pool dump, exactdiag.  Exit status is 0 on
success, 1 when a run or check fails and 2 for invalid input.
"""

import argparse
import json
import logging.config
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

from . import __version__
from .config_validator import ConfigurationError, load_and_validate_config
from .exceptions import SchwingerAdaptError
from .settings import LOGGING, SCHWINGER_SETTINGS
from .utils import validate_positive_integer

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def setup_logging(level: Optional[str] = None) -> None:
    """Configure stdlib logging for the library and a rotating loguru file sink."""
    level = (level or SCHWINGER_SETTINGS['LOG_LEVEL']).upper()
    config = json.loads(json.dumps(LOGGING))
    config['loggers']['schwinger_adapt']['level'] = level
    logging.config.dictConfig(config)
    logger.add(SCHWINGER_SETTINGS['LOG_FILE'], rotation="1 week", retention="4 weeks", level=level)


def _comma_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(',') if item.strip()]


def _positive_int(value: str) -> int:
    try:
        return validate_positive_integer(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _sizes(value: str) -> List[int]:
    try:
        if '-' in value:
            low, high = value.split('-', 1)
            low = validate_positive_integer(low, 'L')
            sizes = list(range(low, validate_positive_integer(high, 'L', min_val=low) + 1))
        else:
            sizes = [validate_positive_integer(v, 'L') for v in _comma_list(value)]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))
    if not sizes:
        raise argparse.ArgumentTypeError(f"no sizes in {value!r}")
    return sizes


def run_document(args: argparse.Namespace) -> dict:
    """Experiment document from --config overlaid with the command-line fields."""
    document = {}
    if args.config:
        results = load_and_validate_config(args.config)
        if not results['valid']:
            raise ConfigurationError(f"{args.config} failed validation")
        document = results['document']
    if args.pools:
        document['pools'] = _comma_list(args.pools)
    if args.presets:
        document['presets'] = _comma_list(args.presets)
    if args.L:
        document['L'] = args.L
    if args.output_dir:
        document['output_dir'] = args.output_dir
    if args.jobs:
        document['jobs'] = args.jobs
    if args.allow_large:
        document['allow_large'] = True
    return document


def cmd_run(args: argparse.Namespace) -> int:
    from .experiments import ExperimentSpec, run_experiment
    from .model import build_hamiltonian

    spec = ExperimentSpec.from_dict(run_document(args))
    result = run_experiment(spec, force=args.force)
    logger.success(f"{len(result.paths)} runs written, {len(result.skipped)} already recorded, "
                   f"{len(result.failures)} failed")
    for run_id, message in result.failures.items():
        logger.error(f"{run_id}: {message}")
    logger.debug(f"Hamiltonian cache: {build_hamiltonian.cache_stats()}")
    return EXIT_OK if result.ok else EXIT_FAILED


def cmd_tables(args: argparse.Namespace) -> int:
    from .experiments import FIGURE_CLASSES, emit_tables, load_trajectories

    trajectories = load_trajectories(args.input)
    if not trajectories:
        logger.error(f"No trajectories found in {', '.join(args.input)}")
        return EXIT_FAILED
    classes = FIGURE_CLASSES if args.figure == 'all' else [args.figure]
    for figure_class in classes:
        try:
            path = emit_tables(trajectories, figure_class, args.output, args.cutoff)
        except ValueError as e:
            if args.figure == 'all':
                logger.warning(f"Skipping {figure_class}: {e}")
                continue
            raise ConfigurationError(str(e))
        logger.success(f"{figure_class}: {path}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    from .acceptance import verify

    results = verify(full=args.full, pool_file=args.pool_file)
    for result in results:
        print(result.line())
    failed = [r for r in results if not r.passed]
    if failed:
        logger.error(f"{len(failed)} of {len(results)} checks failed")
        return EXIT_FAILED
    logger.success(f"All {len(results)} checks passed")
    return EXIT_OK


def cmd_pool_dump(args: argparse.Namespace) -> int:
    from .pools import PoolOptions, build_pool

    options = PoolOptions(distances=args.distances, surface_mode=args.surface_mode,
                          z_surface_swap=args.z_surface_swap, t_relax=args.t_relax)
    pool = build_pool(args.pool, args.L, options, preset=args.preset)
    if args.output:
        pool.dump(args.output)
        logger.success(f"Wrote {len(pool)} operators of {args.pool} to {args.output}")
    else:
        sys.stdout.write(pool.to_text())
    return EXIT_OK


def cmd_exactdiag(args: argparse.Namespace) -> int:
    from .model import build_hamiltonian, get_preset
    from .statevector import ground_state

    params = get_preset(args.preset).params(args.L, args.a)
    hamiltonian = build_hamiltonian(params)
    result = ground_state(hamiltonian, method=args.method)
    if args.hamiltonian_out:
        path = Path(args.hamiltonian_out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(hamiltonian.to_text())
        logger.info(f"Hamiltonian written to {path}")
    print(json.dumps({'preset': args.preset, 'L': args.L, 'a': args.a, 'method': result.method,
                      'energy': result.energy, 'energy_density': result.energy / args.L,
                      'residual': result.residual}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    from .pools import PoolOptions
    from .utils import POOL_IDS, PRESET_LABELS

    parser = argparse.ArgumentParser(
        prog='schwinger_adapt',
        description='Adaptive variational ground states of the lattice Schwinger model',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run.py run --config configs/example_experiment.json
  python run.py run --pools xQZ,LQZ --presets A,C --L 2-4
  python run.py tables --input results --figure all --output tables
  python run.py pool dump --pool LQZ --L 3
  python run.py exactdiag --preset C --L 5
  python run.py verify
        """,
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--log-level', help='Override SCHWINGER_LOG_LEVEL')
    verbs = parser.add_subparsers(dest='command', required=True)

    run = verbs.add_parser('run', help='Run an experiment document')
    run.add_argument('--config', help='Experiment JSON file')
    run.add_argument('--pools', help='Comma-separated pool ids')
    run.add_argument('--presets', help='Comma-separated presets')
    run.add_argument('--L', type=_sizes, help='Sizes as "2,3,4" or "2-6"')
    run.add_argument('--output-dir')
    run.add_argument('--jobs', type=_positive_int)
    run.add_argument('--allow-large', action='store_true', help='Permit L >= 8')
    run.add_argument('--force', action='store_true', help='Recompute runs that are already recorded')
    run.set_defaults(handler=cmd_run)

    tables = verbs.add_parser('tables', help='Write per-figure CSV tables from stored runs')
    tables.add_argument('--input', nargs='+', required=True, help='Run files or directories')
    tables.add_argument('--figure', default='all', help='Figure class or "all"')
    tables.add_argument('--cutoff', type=float, help='Budget for the cutoff figure classes')
    tables.add_argument('--output', default='tables')
    tables.set_defaults(handler=cmd_tables)

    check = verbs.add_parser('verify', help='Run the acceptance checks')
    check.add_argument('--full', action='store_true', help='Include the long-running checks')
    check.add_argument('--pool-file', help='Also check that a dumped pool loads')
    check.set_defaults(handler=cmd_verify)

    pool = verbs.add_parser('pool', help='Operator pool utilities')
    pool_verbs = pool.add_subparsers(dest='pool_command', required=True)
    dump = pool_verbs.add_parser('dump', help='Print or write an operator pool')
    dump.add_argument('--pool', required=True, choices=POOL_IDS)
    dump.add_argument('--L', type=_positive_int, required=True)
    dump.add_argument('--preset', default='C', choices=PRESET_LABELS, help='Seed preset for tiled pools')
    dump.add_argument('--distances', default=PoolOptions.distances, choices=('odd', 'all'))
    dump.add_argument('--surface-mode', default=PoolOptions.surface_mode, choices=('cp_paired', 'separate'))
    dump.add_argument('--z-surface-swap', action='store_true')
    dump.add_argument('--t-relax', action='store_true')
    dump.add_argument('--output')
    dump.set_defaults(handler=cmd_pool_dump)

    exact = verbs.add_parser('exactdiag', help='Exact ground-state energy')
    exact.add_argument('--preset', default='C', choices=PRESET_LABELS)
    exact.add_argument('--L', type=_positive_int, required=True)
    exact.add_argument('--a', type=float, default=1.0, help='Lattice spacing')
    exact.add_argument('--method', default='auto', choices=('auto', 'dense', 'lanczos'))
    exact.add_argument('--hamiltonian-out', help='Write the Hamiltonian in text form')
    exact.set_defaults(handler=cmd_exactdiag)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except ConfigurationError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE
    except (SchwingerAdaptError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILED
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
