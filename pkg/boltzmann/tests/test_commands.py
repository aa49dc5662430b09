"""
Management commands end to end: train, eval, generate, bench, grid, dataset and runs.
"""
import json
import math
from io import StringIO

import pandas as pd
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from boltzmann import tasks
from boltzmann.management.commands._spec_options import build_spec, merged_settings
from boltzmann.models import ExperimentRun, RunStatus
from boltzmann.services.data import load_bmat
from boltzmann.services.model import RbmParams
from boltzmann.services.params_io import load_params, save_params
from boltzmann.services.sampling import read_pgm

from .conftest import random_params


def _run(*args) -> str:
    out = StringIO()
    call_command(*args, stdout=out, stderr=StringIO())
    return out.getvalue()


def _train_args(output_dir, *extra):
    return ('train', '--dataset', 'bars-stripes:2', '--hidden', '3', '--algorithm', 'SDCPD',
            '--eta', '0.02', '--k-prime', '2', '--batch-size', '0', '--epochs', '4',
            '--eval-every', '2', '--output-dir', str(output_dir), *extra)


class TestSettingsMerge:

    def test_flags_override_config_file_over_preset(self, tmp_path):
        config = tmp_path / 'grid.toml'
        config.write_text('eta = 0.3\nepochs = 7\nhidden = 8\n')
        values = merged_settings({'preset': 'bars3', 'config': str(config), 'eta': 0.2, 'algorithm': 'SDCP'})
        assert values['eta'] == 0.2
        assert values['epochs'] == 7
        assert values['hidden'] == 8
        assert values['K'] == 4 and values['trials'] == 25

    def test_preset_rate_depends_on_algorithm(self):
        assert merged_settings({'preset': 'bars3', 'algorithm': 'SDCPD'})['eta'] == 0.025
        assert merged_settings({'preset': 'bars3', 'algorithm': 'CD'})['eta'] == 0.2

    def test_spec_from_json_config(self, tmp_path):
        config = tmp_path / 'run.json'
        config.write_text(json.dumps({'dataset': 'bars-stripes:3', 'hidden': 4, 'algorithm': 'CG',
                                      'trials': 3, 'seed': 10, 'output_dir': str(tmp_path / 'out')}))
        spec = build_spec({'config': str(config)})
        assert spec.seeds == [10, 11, 12]
        assert spec.config.algorithm.value == 'CG'

    def test_default_output_dir(self, settings):
        spec = build_spec({'dataset': 'bars-stripes:3', 'hidden': 4, 'name': 'demo'})
        assert spec.output_dir == settings.RBM_OUTPUT_DIR / 'demo'

    @pytest.mark.parametrize('values', [
        {'dataset': 'bars-stripes:3', 'hidden': 0},
        {'dataset': 'bars-stripes:3', 'hidden': 4, 'eta': -1.0},
        {'dataset': 'bars-stripes:3', 'hidden': 4, 'lambda_H': 2.0},
        {'dataset': 'bars-stripes:3', 'hidden': 4, 'K': 3, 'd': 2, 'K_prime': 2, 'cost_parity': True},
        {'hidden': 4},
    ])
    def test_invalid_settings(self, values):
        with pytest.raises(CommandError, match='INVALID_CONFIG'):
            build_spec(values)

    def test_unknown_preset_algorithm(self):
        with pytest.raises(CommandError, match='INVALID_CONFIG'):
            merged_settings({'preset': 'bars3', 'algorithm': 'ADAM'})

    def test_seeds_replace_preset_trial_count(self, tmp_path):
        options = {'preset': 'bars3', 'seeds': [1, 2, 3], 'output_dir': str(tmp_path)}
        assert 'trials' not in merged_settings(options)
        assert build_spec(options).seeds == [1, 2, 3]

    def test_explicit_trials_must_match_seeds(self, tmp_path):
        options = {'preset': 'bars3', 'seeds': [1, 2, 3], 'trials': 2, 'output_dir': str(tmp_path)}
        with pytest.raises(CommandError, match='INVALID_CONFIG'):
            build_spec(options)


@pytest.mark.django_db
class TestTrainCommand:

    def test_writes_traces_params_and_summary(self, tmp_path):
        out_dir = tmp_path / 'run'
        printed = _run(*_train_args(out_dir, '--trials', '2'))
        assert printed.strip() == str(out_dir / 'summary.csv')
        for k in range(2):
            trace = pd.read_csv(out_dir / f'trace_trial{k}.csv')
            assert list(trace['epoch']) == [0, 1, 2, 3, 4]
            assert trace['train_ll'].notna().sum() == 3
            assert load_params(out_dir / f'params_trial{k}.rbmp').m == 4

        summary = pd.read_csv(out_dir / 'summary.csv')
        assert list(summary['epoch']) == [0, 2, 4]
        assert (summary['trials'] == 2).all()

        run = ExperimentRun.objects.get()
        assert run.status == RunStatus.COMPLETED
        assert sorted(t.seed for t in run.trials.all()) == [0, 1]
        assert all(t.final_train_ll is not None for t in run.trials.all())

    def test_summary_matches_traces(self, tmp_path):
        out_dir = tmp_path / 'run'
        _run(*_train_args(out_dir, '--trials', '3'))
        traces = pd.concat([pd.read_csv(out_dir / f'trace_trial{k}.csv') for k in range(3)])
        final = traces[traces['epoch'] == 4]['train_ll']
        summary = pd.read_csv(out_dir / 'summary.csv').set_index('epoch')
        assert summary.loc[4, 'train_ll_mean'] == pytest.approx(final.mean(), abs=1e-12)
        assert summary.loc[4, 'train_ll_max'] == pytest.approx(final.max(), abs=1e-12)

    def test_rerun_gives_identical_summary(self, tmp_path):
        _run(*_train_args(tmp_path / 'a', '--trials', '2'))
        _run(*_train_args(tmp_path / 'b', '--trials', '2'))
        assert (tmp_path / 'a' / 'summary.csv').read_bytes() == (tmp_path / 'b' / 'summary.csv').read_bytes()

    def test_zero_epochs(self, tmp_path):
        _run('train', '--dataset', 'bars-stripes:2', '--hidden', '2', '--epochs', '0',
             '--output-dir', str(tmp_path))
        assert list(pd.read_csv(tmp_path / 'summary.csv')['epoch']) == [0]

    def test_test_dataset_column(self, tmp_path):
        _run(*_train_args(tmp_path, '--test-dataset', 'bars-stripes:2:distinct'))
        summary = pd.read_csv(tmp_path / 'summary.csv')
        assert summary['test_ll_mean'].notna().all()

    def test_parallel_jobs(self, tmp_path):
        _run(*_train_args(tmp_path, '--trials', '2', '--jobs', '2'))
        run = ExperimentRun.objects.get()
        assert run.status == RunStatus.COMPLETED
        assert all(t.task_id for t in run.trials.all())

    def test_unreadable_dataset_marks_trials_failed(self, tmp_path):
        garbage = tmp_path / 'broken.bmat'
        garbage.write_bytes(b'JUNK' + bytes(32))
        with pytest.raises(CommandError, match='1 of 1 trials failed'):
            _run('train', '--dataset', str(garbage), '--hidden', '2', '--output-dir', str(tmp_path / 'out'))
        trial = ExperimentRun.objects.get().trials.get()
        assert (trial.status, trial.error_code) == (RunStatus.FAILED, 'BAD_FORMAT')

    def test_unexpected_error_fails_one_trial_only(self, tmp_path, monkeypatch):
        real_train = tasks.train

        def crash_on_seed_zero(data, config, *args, **kwargs):
            if config.seed == 0:
                raise RuntimeError('worker crashed')
            return real_train(data, config, *args, **kwargs)

        monkeypatch.setattr(tasks, 'train', crash_on_seed_zero)
        with pytest.raises(CommandError, match='1 of 2 trials failed'):
            _run(*_train_args(tmp_path, '--trials', '2'))
        trials = ExperimentRun.objects.get().trials.order_by('trial_index')
        assert [t.status for t in trials] == [RunStatus.FAILED, RunStatus.COMPLETED]
        assert trials[0].error_code == 'PROCESSING_ERROR'
        assert (pd.read_csv(tmp_path / 'summary.csv')['trials'] == 1).all()

    def test_missing_dataset(self, tmp_path):
        with pytest.raises(CommandError):
            _run('train', '--dataset', str(tmp_path / 'absent.bmat'), '--hidden', '2',
                 '--output-dir', str(tmp_path / 'out'))
        assert ExperimentRun.objects.get().trials.get().error_code == 'IO_ERROR'

    def test_invalid_flags(self, tmp_path):
        with pytest.raises(CommandError, match='INVALID_CONFIG'):
            _run(*_train_args(tmp_path, '--lambda-h', '1.5'))
        assert not ExperimentRun.objects.exists()


class TestEvalCommand:

    def test_zero_params(self, tmp_path):
        path = save_params(RbmParams.zeros(9, 4), tmp_path / 'zero.rbmp')
        report = json.loads(_run('eval', str(path), 'bars-stripes:3'))
        assert report['atll'] == pytest.approx(-9 * math.log(2), abs=1e-4)

    def test_ais_agrees_with_exact(self, tmp_path):
        path = save_params(random_params(9, 8, seed=4, scale=0.5), tmp_path / 'model.json')
        exact = json.loads(_run('eval', str(path), 'bars-stripes:3'))
        dump = tmp_path / 'ais.json'
        ais = json.loads(_run('eval', str(path), 'bars-stripes:3', '--method', 'ais',
                              '--particles', '100', '--intermediate', '1000', '--ais-dump', str(dump)))
        assert abs(exact['atll'] - ais['atll']) < 0.1
        assert len(json.loads(dump.read_text())['log_weights']) == 100

    def test_beyond_cap_suggests_ais(self, tmp_path):
        path = save_params(RbmParams.zeros(9, 4), tmp_path / 'zero.rbmp')
        with pytest.raises(CommandError, match='INTRACTABLE_SIZE.*--method ais'):
            _run('eval', str(path), 'bars-stripes:3', '--cap', '2')

    def test_missing_file(self, tmp_path):
        with pytest.raises(CommandError, match='IO_ERROR'):
            _run('eval', str(tmp_path / 'absent.rbmp'), 'bars-stripes:3')

    def test_dimension_mismatch(self, tmp_path):
        path = save_params(RbmParams.zeros(4, 2), tmp_path / 'small.rbmp')
        with pytest.raises(CommandError, match='SHAPE_MISMATCH'):
            _run('eval', str(path), 'bars-stripes:3')


class TestGenerateCommand:

    def test_pgm_grid(self, tmp_path):
        path = save_params(random_params(9, 4), tmp_path / 'model.rbmp')
        out = tmp_path / 'samples.pgm'
        _run('generate', str(path), '--count', '4', '--steps', '3', '--out', str(out))
        assert read_pgm(out).shape == (6, 6)

    def test_bmat_output(self, tmp_path):
        path = save_params(random_params(9, 4), tmp_path / 'model.rbmp')
        out = tmp_path / 'samples.bmat'
        _run('generate', str(path), '--count', '5', '--steps', '1', '--out', str(out))
        assert load_bmat(out).rows.shape == (5, 9)

    def test_explicit_layout(self, tmp_path):
        path = save_params(random_params(6, 2), tmp_path / 'model.rbmp')
        out = tmp_path / 'wide.pgm'
        _run('generate', str(path), '--count', '6', '--steps', '1', '--out', str(out),
             '--tile-shape', '2x3', '--grid', '1x6')
        assert read_pgm(out).shape == (2, 18)


class TestBenchCommand:

    def test_zero_epochs(self, tmp_path):
        printed = _run('bench', '--dataset', 'bars-stripes:2', '--hidden', '2', '--epochs', '0',
                       '--repeats', '2', '--algorithms', 'CD', 'SDCP', '--output-dir', str(tmp_path))
        table = pd.read_csv(tmp_path / 'bench.csv')
        assert list(table['algorithm']) == ['CD', 'SDCP']
        assert (table['runs'] == 2).all()
        assert 'SDCP/CD' in printed

    def test_unknown_algorithm(self, tmp_path):
        with pytest.raises(CommandError, match='INVALID_CONFIG'):
            _run('bench', '--dataset', 'bars-stripes:2', '--hidden', '2', '--epochs', '0',
                 '--algorithms', 'ADAM', '--output-dir', str(tmp_path))


class TestGridCommand:

    def _args(self, tmp_path, *extra):
        return ('grid', '--dataset', 'bars-stripes:2', '--hidden', '2', '--algorithm', 'CD',
                '--epochs', '2', '--trials', '2', '--output-dir', str(tmp_path), *extra)

    def test_writes_ranked_table(self, tmp_path):
        printed = _run(*self._args(tmp_path, '--grid', 'eta=0.05,0.1', '--grid', 'K=1,2'))
        table = pd.read_csv(tmp_path / 'grid.csv')
        assert len(table) == 4
        assert (table['trials'] == 2).all()
        assert table['final_mean'].is_monotonic_decreasing
        assert f"best: eta={table['eta'].iloc[0]}, K={table['K'].iloc[0]}" in printed

    @pytest.mark.parametrize('entry', ['eta', 'momentum=0.9', 'K=one'])
    def test_bad_grid_entry(self, tmp_path, entry):
        with pytest.raises(CommandError, match='INVALID_CONFIG'):
            _run(*self._args(tmp_path, '--grid', entry))

    def test_needs_grid_or_preset(self, tmp_path):
        with pytest.raises(CommandError, match='INVALID_CONFIG'):
            _run(*self._args(tmp_path))


class TestDatasetCommand:

    def test_bars_stripes_bmat(self, tmp_path):
        out = tmp_path / 'bars.bmat'
        printed = _run('dataset', 'bars-stripes:3:weighted', '--out', str(out))
        assert load_bmat(out).rows.shape == (16, 9)
        assert 'entropy: 2.599' in printed

    def test_csv_and_idx(self, tmp_path):
        _run('dataset', 'bars-stripes:2', '--out', str(tmp_path / 'bars.csv'))
        _run('dataset', 'bars-stripes:2', '--out', str(tmp_path / 'bars.idx'))
        assert len(pd.read_csv(tmp_path / 'bars.csv')) == 6
        assert (tmp_path / 'bars.idx').stat().st_size == 16 + 8 * 4

    def test_unknown_format(self, tmp_path):
        with pytest.raises(CommandError, match='unknown output format'):
            _run('dataset', 'bars-stripes:2', '--out', str(tmp_path / 'bars.npy'))


@pytest.mark.django_db
class TestRunsCommand:

    def test_lists_runs_with_trials(self, tmp_path):
        _run(*_train_args(tmp_path, '--trials', '2', '--epochs', '1'))
        runs = json.loads(_run('runs'))
        assert len(runs) == 1
        assert runs[0]['status'] == RunStatus.COMPLETED
        assert [t['trial_index'] for t in runs[0]['trials']] == [0, 1]

    def test_single_run(self, tmp_path):
        _run(*_train_args(tmp_path, '--epochs', '1'))
        run_id = str(ExperimentRun.objects.get().id)
        assert json.loads(_run('runs', run_id))['id'] == run_id

    def test_unknown_run(self):
        with pytest.raises(CommandError, match='RUN_NOT_FOUND'):
            _run('runs', 'not-a-uuid')
