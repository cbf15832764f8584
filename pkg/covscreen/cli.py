# -*- coding:utf-8 -*-

"""
covscreen command line: simulate, screen, icis and bench subcommands, each
writing CSV artifacts plus a manifest.json that records everything needed to
rerun it.
"""

import argparse
import json
import os
import sys

from . import bench
from .config import build_run_config
from .config import load_config_file
from .cov_block import partition_dataset
from .data_model import load_csv
from .data_model import standardize
from .data_model import write_csv
from .data_model import write_selection
from .errors import ConfigError
from .errors import CovScreenError
from .icis import IcisParams
from .icis import run_icis
from .log import set_log_level
from .log import setup_default_logger
from .screening import METHOD_CIS
from .screening import create_screener
from .simgen import ModelSpec
from .simgen import generate
from .version import VERSION_STRING

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

logger = setup_default_logger('covscreen.cli')


def _global_parser():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--seed', type=int, default=None, help='global seed')
    parser.add_argument('--threads', type=int, default=None, help='worker threads')
    parser.add_argument('--config', default=None, help='JSON file with values for any long flag')
    parser.add_argument('--out-dir', dest='out_dir', default=None, help='output directory')
    parser.add_argument('--log-level', dest='log_level', default=None, help='DEBUG, INFO, WARNING, ERROR')
    parser.add_argument('--timings', action='store_const', const=True, default=None,
                        help='add wall_ms to records.csv')
    return parser


def _partition_flags(parser):
    parser.add_argument('--delta', type=float, default=None, help='correlation threshold')
    parser.add_argument('--delta-multiplier', dest='delta_multiplier', type=float, default=None,
                        help='c in delta = c * sqrt(log p / n)')
    parser.add_argument('--cap', type=int, default=None, help='maximum block size')


def build_parser():
    common = _global_parser()
    parser = argparse.ArgumentParser(prog='covscreen', description='covariance-insured variable screening')
    parser.add_argument('--version', action='version', version='covscreen %s' % VERSION_STRING)
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    simulate = commands.add_parser('simulate', parents=[common], help='generate a simulation dataset')
    simulate.add_argument('--model', default=None, help='A, B, C, D or E')
    simulate.add_argument('--n', type=int, default=None)
    simulate.add_argument('--p', type=int, default=None)
    simulate.add_argument('--m', type=int, default=None, help='block count')
    simulate.add_argument('--rho', type=float, default=None, help='AR(1) parameter')
    simulate.add_argument('--beta-mag', dest='beta_mag', type=float, default=None)
    simulate.add_argument('--kappa', type=float, default=None)
    simulate.add_argument('--pi', type=float, default=None)
    simulate.add_argument('--theta', type=float, default=None)
    simulate.add_argument('--sigma', type=float, default=None)

    screen = commands.add_parser('screen', parents=[common], help='screen a dataset')
    screen.add_argument('--input', default=None, help='dataset CSV')
    screen.add_argument('--response', default=None, help='response column name')
    screen.add_argument('--method', default=None, help='cis, sis or holp')
    screen.add_argument('--top-k', dest='top_k', type=int, default=None)
    screen.add_argument('--threshold', type=float, default=None)
    _partition_flags(screen)

    icis = commands.add_parser('icis', parents=[common], help='resampled iterative screening with FDR control')
    icis.add_argument('--input', default=None, help='dataset CSV')
    icis.add_argument('--response', default=None, help='response column name')
    icis.add_argument('--B', dest='B', type=int, default=None, help='bootstrap resamples')
    icis.add_argument('--q', type=float, default=None, help='target false discovery rate')
    icis.add_argument('--n-perm', dest='n_perm', type=int, default=None, help='permutations')
    icis.add_argument('--null-B', dest='null_B', type=int, default=None, help='resamples per permutation')
    icis.add_argument('--max-iter', dest='max_iter', type=int, default=None)
    icis.add_argument('--screen-k', dest='screen_k', type=int, default=None)
    icis.add_argument('--screener', default=None, help='cis, sis or holp')
    icis.add_argument('--freeze-partition', dest='freeze_partition', action='store_const', const=True,
                      default=None)
    icis.add_argument('--criterion', default=None, help='bic or cv')
    icis.add_argument('--gamma', type=float, default=None)
    icis.add_argument('--ebic-gamma', dest='ebic_gamma', type=float, default=None,
                      help='extended BIC weight, 0 for plain BIC')
    _partition_flags(icis)

    experiment = commands.add_parser('bench', parents=[common], help='run a benchmark preset')
    experiment.add_argument('--preset', default=None, help=', '.join(sorted(bench.PRESETS)))
    experiment.add_argument('--methods', default=None, help='comma separated, e.g. cis,sis,holp')
    experiment.add_argument('--reps', type=int, default=None)
    experiment.add_argument('--B', dest='B', type=int, default=None)
    experiment.add_argument('--q', type=float, default=None)
    experiment.add_argument('--psi', type=float, default=None)
    experiment.add_argument('--n-perm', dest='n_perm', type=int, default=None)
    experiment.add_argument('--cap', type=int, default=None)
    return parser


def _write_manifest(out_dir, config, outputs, **extra):
    manifest = {
        'command': config.command,
        'config': config.to_dict(),
        'seed': config.seed,
        'versions': bench.environment_versions(),
        'outputs': [os.path.basename(path) for path in outputs],
    }
    manifest.update(extra)
    path = os.path.join(out_dir, 'manifest.json')
    with open(path, 'w') as fp:
        json.dump(manifest, fp, indent=2, sort_keys=True, default=str)
    return path


def cmd_simulate(config) -> int:
    try:
        spec = ModelSpec(config.model, n=config.n, p=config.p, m=config.m, rho=config.rho, beta_mag=config.beta_mag,
                         kappa=config.kappa, pi=config.pi, theta=config.theta, sigma=config.sigma, seed=config.seed)
    except ValueError as e:
        raise ConfigError(str(e))
    data, truth = generate(spec)
    outputs = [write_csv(data, os.path.join(config.out_dir, 'dataset.csv')),
               truth.write(os.path.join(config.out_dir, 'truth.csv'))]
    _write_manifest(config.out_dir, config, outputs, spec=spec.to_dict())
    logger.info('simulated dataset, spec=%s, out_dir=%s', spec, config.out_dir)
    return EXIT_OK


def _load_standardized(config):
    return standardize(load_csv(config.input, config.response))


def cmd_screen(config) -> int:
    data = _load_standardized(config)
    if config.top_k is not None and config.top_k > data.p:
        raise ConfigError('top_k must not exceed p=%d, got %d' % (data.p, config.top_k), keys=['top_k'])
    outputs = []
    extra = {}
    if config.method == METHOD_CIS:
        partition = partition_dataset(data, config.delta, config.cap, config.delta_multiplier, config.threads)
        outputs += [os.path.join(config.out_dir, 'partition.csv'), os.path.join(config.out_dir, 'partition.json')]
        partition.write(outputs[0], outputs[1])
        screener = create_screener(METHOD_CIS, partition=partition, threads=config.threads)
        extra['partition'] = partition.to_dict()
    else:
        screener = create_screener(config.method)
    stats, selection = screener.raw_process(data, top_k=config.top_k, threshold=config.threshold)
    outputs.append(stats.write(os.path.join(config.out_dir, 'stats.csv'), data.names))
    outputs.append(write_selection(selection, data.names, os.path.join(config.out_dir, 'selection.csv')))
    _write_manifest(config.out_dir, config, outputs, selection=selection.to_dict(), warnings=stats.warnings, **extra)
    logger.info('screened dataset, method=%s, n=%d, p=%d, selected=%d',
                config.method, data.n, data.p, len(selection.selected))
    return EXIT_OK


def cmd_icis(config) -> int:
    data = _load_standardized(config)
    params = IcisParams(B=config.B, max_iter=config.max_iter, screen_k=config.screen_k, delta=config.delta,
                        delta_multiplier=config.delta_multiplier, cap=config.cap, seed=config.seed,
                        screener=config.screener, freeze_partition=config.freeze_partition,
                        criterion=config.criterion, gamma=config.gamma, ebic_gamma=config.ebic_gamma,
                        null_B=config.null_B, threads=config.threads)
    frequencies, curve, selection = run_icis(data, params, config.q, config.n_perm, config.threads)
    outputs = [
        frequencies.write(os.path.join(config.out_dir, 'frequencies.csv'), data.names),
        curve.write(os.path.join(config.out_dir, 'fdr_curve.csv')),
        write_selection(selection, data.names, os.path.join(config.out_dir, 'selection.csv')),
    ]
    _write_manifest(config.out_dir, config, outputs, params=params.to_dict(), fdr=curve.to_dict(),
                    selection=selection.to_dict())
    logger.info('icis done, B=%d, q=%s, chosen_psi=%s, selected=%d',
                params.B, config.q, curve.chosen_psi, len(selection.selected))
    return EXIT_OK


def cmd_bench(config) -> int:
    overrides = {'seed': config.seed, 'reps': config.reps, 'methods': config.methods, 'q': config.q,
                 'psi': config.psi, 'n_perm': config.n_perm, 'cap': config.cap}
    if config.B is not None:
        overrides['icis'] = IcisParams(B=config.B)
    try:
        experiment = bench.preset_config(config.preset, **overrides)
    except ValueError as e:
        raise ConfigError(str(e), keys=['preset'])
    report = bench.run_experiment(experiment, config.threads)
    bench.emit_report(report, config.out_dir, timings=config.timings)
    logger.info('bench done, preset=%s, records=%d, failures=%d',
                config.preset, len(report.records), len(report.failures))
    return EXIT_FAILURE if report.failed else EXIT_OK


COMMAND_MAP = {
    'simulate': cmd_simulate,
    'screen': cmd_screen,
    'icis': cmd_icis,
    'bench': cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    flags = {k: v for k, v in vars(args).items() if k not in ('command', 'config')}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        config = build_run_config(args.command, flags, file_values)
        set_log_level(config.log_level)
        os.makedirs(config.out_dir, exist_ok=True)
        return COMMAND_MAP[args.command](config)
    except ConfigError as e:
        logger.error('invalid configuration, keys=%s, error=%s', ','.join(e.keys), e)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (CovScreenError, ValueError, OSError) as e:
        logger.error('%s failed, error=%s', args.command, e)
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
