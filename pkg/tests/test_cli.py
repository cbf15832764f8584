import json

import pandas as pd
import pytest

from covscreen.cli import EXIT_OK
from covscreen.cli import EXIT_USAGE
from covscreen.cli import main
from covscreen.config import build_run_config
from covscreen.errors import ConfigError


def simulate(out_dir, *extra):
    argv = ['simulate', '--model', 'B', '--n', '60', '--p', '1000', '--m', '10', '--rho', '0.5',
            '--seed', '7', '--out-dir', str(out_dir)] + list(extra)
    return main(argv)


@pytest.fixture
def dataset_csv(tmp_path):
    assert simulate(tmp_path / 'sim') == EXIT_OK
    return str(tmp_path / 'sim' / 'dataset.csv')


class TestSimulate:

    def test_writes_artifacts(self, tmp_path):
        assert simulate(tmp_path) == EXIT_OK
        data = pd.read_csv(tmp_path / 'dataset.csv')
        assert data.shape == (60, 1001)
        assert data.columns[0] == 'y'
        truth = pd.read_csv(tmp_path / 'truth.csv')
        assert list(truth.columns) == ['index_1based', 'beta']
        assert (truth.beta != 0).sum() == 10
        manifest = json.loads((tmp_path / 'manifest.json').read_text())
        assert manifest['command'] == 'simulate'
        assert manifest['seed'] == 7
        assert manifest['spec']['model'] == 'B'

    def test_rerun_is_byte_identical(self, tmp_path):
        simulate(tmp_path / 'a')
        simulate(tmp_path / 'b')
        for name in ('dataset.csv', 'truth.csv'):
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    def test_missing_rho(self, tmp_path):
        argv = ['simulate', '--model', 'A', '--n', '60', '--p', '1000', '--m', '10', '--out-dir', str(tmp_path)]
        assert main(argv) == EXIT_USAGE
        assert not (tmp_path / 'dataset.csv').exists()

    def test_inconsistent_block_count(self, tmp_path):
        assert simulate(tmp_path, '--m', '12') == EXIT_USAGE

    def test_unknown_flag(self, tmp_path):
        assert simulate(tmp_path, '--colour', 'red') == EXIT_USAGE


class TestScreen:

    def test_cis(self, tmp_path, dataset_csv):
        out = tmp_path / 'screen'
        assert main(['screen', '--input', dataset_csv, '--method', 'cis', '--top-k', '20',
                     '--out-dir', str(out)]) == EXIT_OK
        stats = pd.read_csv(out / 'stats.csv')
        assert len(stats) == 1000
        assert stats['block_id'].notna().all()
        assert sorted(stats['rank']) == list(range(1, 1001))
        assert len(pd.read_csv(out / 'selection.csv')) == 20
        assert (out / 'partition.csv').exists() and (out / 'partition.json').exists()

    def test_sis_has_no_partition(self, tmp_path, dataset_csv):
        out = tmp_path / 'screen'
        assert main(['screen', '--input', dataset_csv, '--method', 'sis', '--out-dir', str(out)]) == EXIT_OK
        assert not (out / 'partition.csv').exists()
        assert pd.read_csv(out / 'stats.csv')['method'].eq('SIS').all()

    def test_bad_top_k(self, tmp_path, dataset_csv):
        assert main(['screen', '--input', dataset_csv, '--top-k', '0', '--out-dir', str(tmp_path)]) == EXIT_USAGE
        assert main(['screen', '--input', dataset_csv, '--top-k', '1001', '--out-dir', str(tmp_path)]) == EXIT_USAGE

    def test_missing_input_file(self, tmp_path):
        assert main(['screen', '--input', str(tmp_path / 'absent.csv'), '--out-dir', str(tmp_path)]) == 1


class TestIcis:

    def icis(self, dataset_csv, out, *extra):
        return main(['icis', '--input', dataset_csv, '--B', '4', '--n-perm', '2', '--null-B', '2',
                     '--screen-k', '10', '--seed', '3', '--out-dir', str(out)] + list(extra))

    def test_bad_q(self, tmp_path, dataset_csv):
        assert self.icis(dataset_csv, tmp_path, '--q', '1.5') == EXIT_USAGE

    def test_ebic_gamma_flag(self, tmp_path, dataset_csv):
        assert self.icis(dataset_csv, tmp_path / 'bad', '--ebic-gamma', '-1') == EXIT_USAGE
        assert self.icis(dataset_csv, tmp_path / 'plain', '--ebic-gamma', '0') == EXIT_OK
        manifest = json.loads((tmp_path / 'plain' / 'manifest.json').read_text())
        assert manifest['config']['ebic_gamma'] == 0.0
        assert manifest['params']['ebicGamma'] == 0.0

    def test_artifacts_and_determinism(self, tmp_path, dataset_csv):
        assert self.icis(dataset_csv, tmp_path / 'one', '--threads', '1') == EXIT_OK
        assert self.icis(dataset_csv, tmp_path / 'two', '--threads', '2') == EXIT_OK
        for name in ('frequencies.csv', 'fdr_curve.csv', 'selection.csv'):
            assert (tmp_path / 'one' / name).read_bytes() == (tmp_path / 'two' / name).read_bytes()
        frequencies = pd.read_csv(tmp_path / 'one' / 'frequencies.csv')
        assert frequencies['count'].between(0, 4).all()
        curve = pd.read_csv(tmp_path / 'one' / 'fdr_curve.csv')
        assert (curve['fdr_hat'].diff().dropna() <= 0).all()


class TestBench:

    def test_unknown_preset(self, tmp_path):
        assert main(['bench', '--preset', 'table9', '--out-dir', str(tmp_path)]) == EXIT_USAGE

    def test_unknown_method(self, tmp_path):
        assert main(['bench', '--preset', 'table1-desk', '--methods', 'cis,tilting',
                     '--out-dir', str(tmp_path)]) == EXIT_USAGE

    def test_zero_reps(self, tmp_path):
        assert main(['bench', '--preset', 'table1-desk-b', '--reps', '0', '--out-dir', str(tmp_path)]) == EXIT_OK
        assert (tmp_path / 'records.csv').read_text().strip() == 'replicate,seed,model,method,min_model_size,fp,fn'


class TestConfig:

    def test_flags_override_file(self, tmp_path, dataset_csv):
        config_path = tmp_path / 'run.json'
        config_path.write_text(json.dumps({'input': dataset_csv, 'method': 'holp', 'top-k': 5}))
        out = tmp_path / 'screen'
        assert main(['screen', '--config', str(config_path), '--top-k', '7', '--out-dir', str(out)]) == EXIT_OK
        manifest = json.loads((out / 'manifest.json').read_text())
        assert manifest['config']['method'] == 'HOLP'
        assert manifest['config']['top_k'] == 7
        assert len(pd.read_csv(out / 'selection.csv')) == 7

    def test_unknown_file_key(self, tmp_path, dataset_csv):
        config_path = tmp_path / 'run.json'
        config_path.write_text(json.dumps({'input': dataset_csv, 'colour': 'red'}))
        assert main(['screen', '--config', str(config_path), '--out-dir', str(tmp_path)]) == EXIT_USAGE

    def test_defaults(self):
        config = build_run_config('icis', {'input': 'data.csv'})
        assert (config.B, config.q, config.n_perm, config.screener) == (50, 0.1, 20, 'CIS')
        assert config.delta_multiplier == 5.0
        assert config.ebic_gamma == 1.0

    def test_missing_keys_are_listed(self):
        with pytest.raises(ConfigError) as info:
            build_run_config('simulate', {'model': 'c'})
        assert info.value.keys == ['n', 'p', 'rho']
