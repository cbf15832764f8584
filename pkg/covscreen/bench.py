# -*- coding:utf-8 -*-

"""
Seeded Monte Carlo comparisons of screeners and selectors on the simulation
designs. Every replicate draws one dataset that all methods share.
"""

import json
import os
import platform
import time

import numpy as np
import pandas as pd
import scipy
import sklearn

from .data_model import ActiveSet
from .icis import IcisParams
from .icis import icis_resample
from .icis import icis_single
from .icis import permutation_fdr
from .icis import select_by_frequency
from .log import setup_default_logger
from .regression import CRITERION_BIC
from .regression import CRITERION_CV
from .regression import adaptive_lasso
from .regression import lasso_select
from .screening import METHOD_CIS
from .screening import METHOD_HOLP
from .screening import METHOD_SIS
from .screening import create_screener
from .screening import min_model_size
from .simgen import ModelSpec
from .simgen import generate
from .utils import STREAM_CV
from .utils import STREAM_ITERATED
from .utils import STREAM_REPLICATE
from .utils import derive_seed
from .utils import run_tasks
from .utils import substream
from .version import VERSION_STRING

RECORD_COLUMNS = ['replicate', 'seed', 'model', 'method', 'min_model_size', 'fp', 'fn']
AGGREGATE_COLUMNS = ['method', 'metric', 'mean', 'sd', 'n_reps']
METRICS = ('min_model_size', 'fp', 'fn', 'fp_fn')

logger = setup_default_logger('covscreen.bench')


def metrics_fp_fn(selected, truth):
    """ (|selected minus truth|, |truth minus selected|) """
    selected = selected if isinstance(selected, ActiveSet) else ActiveSet(selected)
    truth = truth if isinstance(truth, ActiveSet) else ActiveSet(truth)
    return len(selected.difference(truth)), len(truth.difference(selected))


class MethodHandler(object):
    NAME = None

    def __init__(self):
        self.logger = setup_default_logger('covscreen.bench.method')

    def process(self, data, truth, config: 'ExperimentConfig', seed: int):
        raise NotImplementedError

    def raw_process(self, data, truth, config: 'ExperimentConfig', seed: int):
        """ one record's metric fields for this method on one replicate """
        result = self.process(data, truth, config, seed)
        if isinstance(result, ActiveSet):
            fp, fn = metrics_fp_fn(result, truth.support)
            return {'min_model_size': None, 'fp': fp, 'fn': fn}
        return {'min_model_size': int(result), 'fp': None, 'fn': None}


class ScreenerHandler(MethodHandler):

    def __init__(self, method: str):
        super(ScreenerHandler, self).__init__()
        self.NAME = method

    def process(self, data, truth, config, seed):
        if self.NAME == METHOD_CIS:
            screener = create_screener(METHOD_CIS, delta=config.icis.delta,
                                       delta_multiplier=config.icis.delta_multiplier, cap=config.cap, threads=1)
        else:
            screener = create_screener(self.NAME)
        return min_model_size(screener.process(data), truth.support)


class IcisHandler(MethodHandler):
    NAME = 'ICIS'

    def process(self, data, truth, config, seed):
        params = config.icis.copy(seed=seed, cap=config.cap, threads=1)
        frequencies = icis_resample(data, params)
        psi = config.psi
        if config.q is not None:
            psi = permutation_fdr(data, config.q, params, config.n_perm, observed=frequencies).chosen_psi
        return select_by_frequency(frequencies, psi).selected


class IteratedHandler(MethodHandler):
    """ the ICIS iteration run once on the unresampled data with another screener """

    def __init__(self, name: str, screener: str):
        super(IteratedHandler, self).__init__()
        self.NAME = name
        self.screener = screener

    def process(self, data, truth, config, seed):
        params = config.icis.copy(seed=seed, screener=self.screener, cap=config.cap, threads=1)
        return icis_single(data, params, substream(seed, STREAM_ITERATED, 0))


class LassoHandler(MethodHandler):
    NAME = 'Lasso'

    def process(self, data, truth, config, seed):
        cv_seed = derive_seed(seed, STREAM_CV, 0)
        selected, _, _ = lasso_select(data.y, data.X, criterion=config.lasso_criterion, seed=cv_seed)
        return selected


class AdaptiveLassoHandler(MethodHandler):
    NAME = 'AdaptiveLasso'

    def process(self, data, truth, config, seed):
        selected, _, _ = adaptive_lasso(data.y, data.X, config.icis.gamma, criterion=CRITERION_BIC, seed=seed)
        return selected


def default_method_handlers():
    handlers = [
        ScreenerHandler(METHOD_CIS),
        ScreenerHandler(METHOD_SIS),
        ScreenerHandler(METHOD_HOLP),
        IcisHandler(),
        IteratedHandler('ISIS', METHOD_SIS),
        IteratedHandler('IHOLP', METHOD_HOLP),
        LassoHandler(),
        AdaptiveLassoHandler(),
    ]
    return {handler.NAME: handler for handler in handlers}


METHODS = tuple(default_method_handlers())


def canonical_method(name: str) -> str:
    lookup = {method.lower(): method for method in METHODS}
    key = str(name).strip().lower()
    if key not in lookup:
        raise ValueError('unknown method %s, expected one of %s' % (name, ', '.join(METHODS)))
    return lookup[key]


class ExperimentConfig(object):

    def __init__(self, spec: ModelSpec, methods, reps: int = 100, seed: int = 0, icis: IcisParams = None,
                 psi: float = 0.5, q: float = None, n_perm: int = 20, cap: int = None,
                 lasso_criterion: str = CRITERION_CV, preset: str = None):
        methods = [canonical_method(method) for method in methods]
        if not methods:
            raise ValueError('an experiment needs at least one method')
        if len(set(methods)) != len(methods):
            raise ValueError('duplicate methods in %s' % methods)
        if reps < 0:
            raise ValueError('reps must be non-negative, got %s' % reps)
        if not 0 < psi <= 1:
            raise ValueError('psi must lie in (0, 1], got %s' % psi)
        if q is not None and not 0 < q < 1:
            raise ValueError('q must lie in (0, 1), got %s' % q)
        if lasso_criterion not in (CRITERION_BIC, CRITERION_CV):
            raise ValueError('unknown criterion %s' % lasso_criterion)
        self.spec = spec
        self.methods = methods
        self.reps = int(reps)
        self.seed = int(seed)
        self.icis = icis or IcisParams()
        self.psi = float(psi)
        self.q = q
        self.n_perm = int(n_perm)
        self.cap = cap
        self.lasso_criterion = lasso_criterion
        self.preset = preset

    def to_dict(self):
        return {
            'preset': self.preset,
            'spec': self.spec.to_dict(),
            'methods': list(self.methods),
            'reps': self.reps,
            'seed': self.seed,
            'icis': self.icis.to_dict(),
            'psi': self.psi,
            'q': self.q,
            'nPerm': self.n_perm,
            'cap': self.cap,
            'lassoCriterion': self.lasso_criterion,
        }

    @classmethod
    def from_dict(cls, d):
        return ExperimentConfig(ModelSpec.from_dict(d['spec']), d['methods'], reps=d.get('reps', 100),
                                seed=d.get('seed', 0), icis=IcisParams.from_dict(d.get('icis', {})),
                                psi=d.get('psi', 0.5), q=d.get('q'), n_perm=d.get('nPerm', 20), cap=d.get('cap'),
                                lasso_criterion=d.get('lassoCriterion', CRITERION_CV), preset=d.get('preset'))


_SCREENERS = ['CIS', 'SIS', 'HOLP']
_SELECTORS = ['ICIS', 'ISIS', 'IHOLP', 'Lasso', 'AdaptiveLasso']

PRESETS = {
    'table1-desk': {'spec': {'model': 'A', 'n': 400, 'p': 2000, 'm': 20, 'rho': 0.7},
                    'methods': _SCREENERS, 'reps': 100},
    'table1-desk-a9': {'spec': {'model': 'A', 'n': 400, 'p': 2000, 'm': 20, 'rho': 0.9},
                       'methods': _SCREENERS, 'reps': 100},
    'table1-desk-b': {'spec': {'model': 'B', 'n': 400, 'p': 2000, 'm': 20, 'rho': 0.5},
                      'methods': _SCREENERS, 'reps': 100},
    'table1-desk-c': {'spec': {'model': 'C', 'n': 400, 'p': 2000, 'rho': 0.7},
                      'methods': _SCREENERS, 'reps': 100, 'cap': 200},
    'table2-desk': {'spec': {'model': 'D', 'n': 400, 'p': 1000, 'm': 10, 'betaMag': 1.0},
                    'methods': _SELECTORS, 'reps': 100},
    'table3-desk': {'spec': {'model': 'E', 'p': 1000},
                    'methods': ['ICIS', 'ISIS', 'Lasso'], 'reps': 50},
    'table1-full': {'spec': {'model': 'A', 'n': 1000, 'p': 10000, 'm': 100, 'rho': 0.7},
                    'methods': _SCREENERS, 'reps': 100},
    'table2-full': {'spec': {'model': 'D', 'n': 1000, 'p': 10000, 'm': 100, 'betaMag': 1.0},
                    'methods': _SELECTORS, 'reps': 100},
    'table3-full': {'spec': {'model': 'E', 'p': 5000},
                    'methods': ['ICIS', 'ISIS', 'Lasso'], 'reps': 100},
}


def preset_config(name: str, **overrides) -> ExperimentConfig:
    """ a named preset, with reps / methods / seed / q / psi / icis overrides """
    if name not in PRESETS:
        raise ValueError('unknown preset %s, expected one of %s' % (name, ', '.join(sorted(PRESETS))))
    d = dict(PRESETS[name], preset=name)
    d.update({k: v for k, v in overrides.items() if v is not None})
    spec = d['spec'] if isinstance(d['spec'], ModelSpec) else ModelSpec.from_dict(d['spec'])
    return ExperimentConfig(spec, d['methods'], reps=d.get('reps', 100), seed=d.get('seed', 0),
                            icis=d.get('icis'), psi=d.get('psi', 0.5), q=d.get('q'), n_perm=d.get('n_perm', 20),
                            cap=d.get('cap'), lasso_criterion=d.get('lasso_criterion', CRITERION_CV), preset=name)


class ExperimentReport(object):

    def __init__(self, config: ExperimentConfig, records=None, failures=None):
        self.config = config
        self.records = sorted(records or [], key=lambda r: (r['replicate'], config.methods.index(r['method'])))
        self.failures = list(failures or [])

    @property
    def failed(self) -> bool:
        return bool(self.failures)

    def records_frame(self, timings: bool = False) -> pd.DataFrame:
        columns = RECORD_COLUMNS + (['wall_ms'] if timings else [])
        rows = [[('' if record.get(c) is None else record.get(c)) for c in columns] for record in self.records]
        return pd.DataFrame(rows, columns=columns, dtype=object)

    def aggregates(self) -> pd.DataFrame:
        """ mean and sd (ddof 1, 0 for a single replicate) of each metric per method """
        rows = []
        for method in self.config.methods:
            records = [r for r in self.records if r['method'] == method and not r.get('error')]
            for metric in METRICS:
                if metric == 'fp_fn':
                    values = [r['fp'] + r['fn'] for r in records if r['fp'] is not None]
                else:
                    values = [r[metric] for r in records if r[metric] is not None]
                if not values:
                    continue
                values = np.asarray(values, dtype=float)
                sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
                rows.append([method, metric, float(values.mean()), sd, int(values.size)])
        return pd.DataFrame(rows, columns=AGGREGATE_COLUMNS)

    def summary(self, method: str, metric: str):
        frame = self.aggregates()
        row = frame[(frame['method'] == method) & (frame['metric'] == metric)]
        if row.empty:
            raise KeyError('no %s aggregate for %s' % (metric, method))
        return float(row['mean'].iloc[0]), float(row['sd'].iloc[0])

    def __str__(self):
        return 'ExperimentReport(records=%d, failures=%d)' % (len(self.records), len(self.failures))


class ExperimentRunner(object):

    def __init__(self, threads: int = None):
        self.method_handler_map = {}
        self.threads = threads
        self.logger = setup_default_logger('covscreen.bench')
        for name, handler in default_method_handlers().items():
            self.register_method_handler(name, handler)

    def register_method_handler(self, name: str, handler: MethodHandler):
        self.method_handler_map[name] = handler

    def run_replicate(self, config: ExperimentConfig, replicate: int):
        seed = derive_seed(config.seed, STREAM_REPLICATE, replicate)
        records, failures = [], []
        base = {'replicate': replicate, 'seed': seed, 'model': config.spec.model}
        try:
            data, truth = generate(config.spec.with_seed(seed))
        except Exception as e:
            self.logger.exception('replicate data generation failed, replicate=%d, error=%s', replicate, e)
            for method in config.methods:
                failures.append({'replicate': replicate, 'method': method, 'error': str(e)})
                records.append(dict(base, method=method, min_model_size=None, fp=None, fn=None, wall_ms=0.0,
                                    error=str(e)))
            return records, failures
        for method in config.methods:
            handler = self.method_handler_map[method]
            start = time.perf_counter()
            try:
                fields = handler.raw_process(data, truth, config, seed)
                error = None
            except Exception as e:
                self.logger.exception('method failed, replicate=%d, method=%s, error=%s', replicate, method, e)
                fields = {'min_model_size': None, 'fp': None, 'fn': None}
                error = str(e)
                failures.append({'replicate': replicate, 'method': method, 'error': error})
            wall_ms = (time.perf_counter() - start) * 1000.0
            records.append(dict(base, method=method, wall_ms=wall_ms, error=error, **fields))
        return records, failures

    def run(self, config: ExperimentConfig) -> ExperimentReport:
        self.logger.info('experiment start, preset=%s, model=%s, methods=%s, reps=%d, seed=%d',
                         config.preset, config.spec.model, ','.join(config.methods), config.reps, config.seed)
        results = run_tasks(lambda r: self.run_replicate(config, r), range(config.reps), self.threads)
        records = [record for replicate_records, _ in results for record in replicate_records]
        failures = [failure for _, replicate_failures in results for failure in replicate_failures]
        report = ExperimentReport(config, records, failures)
        if failures:
            self.logger.warning('experiment finished with failures, failures=%d', len(failures))
        return report


def run_experiment(config: ExperimentConfig, threads: int = None) -> ExperimentReport:
    return ExperimentRunner(threads).run(config)


def environment_versions():
    return {
        'covscreen': VERSION_STRING,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pandas': pd.__version__,
        'scikit-learn': sklearn.__version__,
    }


def emit_report(report: ExperimentReport, out_dir: str, timings: bool = False):
    """ records.csv, aggregates.csv and manifest.json under out_dir """
    os.makedirs(out_dir, exist_ok=True)
    records_path = os.path.join(out_dir, 'records.csv')
    aggregates_path = os.path.join(out_dir, 'aggregates.csv')
    manifest_path = os.path.join(out_dir, 'manifest.json')
    report.records_frame(timings).to_csv(records_path, index=False, float_format='%.17g')
    report.aggregates().to_csv(aggregates_path, index=False, float_format='%.17g')
    manifest = {
        'command': 'bench',
        'config': report.config.to_dict(),
        'seed': report.config.seed,
        'versions': environment_versions(),
        'timings': [{'replicate': r['replicate'], 'method': r['method'], 'wallMs': r.get('wall_ms')}
                    for r in report.records],
        'failures': report.failures,
    }
    with open(manifest_path, 'w') as fp:
        json.dump(manifest, fp, indent=2, sort_keys=True)
    return [records_path, aggregates_path, manifest_path]
