import json
import os
import tempfile
import unittest

import pandas as pd

import app


class CliTest(unittest.TestCase):
    """End-to-end runs of the batch command line on a small simulated portfolio."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = os.path.join(self.tmp.name, 'out')
        self.sim = os.path.join(self.tmp.name, 'sim.json')
        with open(self.sim, 'w', encoding='utf-8') as f:
            json.dump({'n': 20000}, f)

    def tearDown(self):
        self.tmp.cleanup()

    def run_cli(self, *argv, out=None):
        return app.main([*argv, '--out-dir', out or self.out])

    def read_json(self, name):
        with open(os.path.join(self.out, name), encoding='utf-8') as f:
            return json.load(f)

    def test_simulate_then_fit(self):
        self.assertEqual(self.run_cli('simulate', '--simulate-config', self.sim, '--seed', '3'), 0)
        claims = os.path.join(self.out, 'simulated_claims.csv')
        self.assertEqual(len(pd.read_csv(claims)), 20000)

        self.assertEqual(self.run_cli('fit', '--input', claims, '--u', '8.5'), 0)
        fit = self.read_json('simulated_claims_fit.json')
        self.assertTrue(fit['converged'])
        self.assertTrue(fit['reliable'])
        self.assertEqual(fit['method'], 'MLE')
        self.assertAlmostEqual(fit['xi'], -0.1, delta=0.1)
        self.assertIn('wald', fit)
        manifest = self.read_json('run_manifest.json')
        self.assertEqual(manifest['exit_code'], 0)
        self.assertIn(os.path.abspath(claims), manifest['inputs'])

    def test_diagnose_reuses_fit(self):
        self.assertEqual(self.run_cli('fit', '--simulate-config', self.sim, '--u', '8.5'), 0)
        fit = self.read_json('simulated_fit.json')
        self.assertEqual(self.run_cli('diagnose', '--simulate-config', self.sim, '--u', '8.5'), 0)
        diag = self.read_json('simulated_diagnostics.json')
        self.assertEqual(diag['fit']['xi'], fit['xi'])
        self.assertEqual(diag['fit_file'], 'simulated_fit.json')
        for kind in ('pp', 'qqgpd', 'return_level', 'histogram', 'density', 'hill'):
            self.assertTrue(os.path.exists(os.path.join(self.out, f'simulated_{kind}.csv')), kind)

    def test_var_table(self):
        code = self.run_cli('var', '--simulate-config', self.sim, '--u', '8.5', '--q', '0.95,0.99')
        self.assertEqual(code, 0)
        table = pd.read_csv(os.path.join(self.out, 'simulated_var.csv'))
        self.assertEqual(list(table['q']), [0.95, 0.99])
        self.assertTrue((table['es_q'] > table['var_q']).all())

    def test_grouped_outputs(self):
        code = self.run_cli('mrl', '--simulate-config', self.sim, '--group-by', 'gender', '--u-grid', '7:9:5')
        self.assertEqual(code, 0)
        for label in ('male', 'female', 'unknown'):
            self.assertTrue(os.path.exists(os.path.join(self.out, f'simulated_{label}_mrl.csv')), label)

    def test_seeded_runs_identical(self):
        outputs = []
        for run in ('a', 'b'):
            out = os.path.join(self.tmp.name, run)
            self.assertEqual(self.run_cli('mrl', '--simulate-config', self.sim, '--seed', '9', out=out), 0)
            with open(os.path.join(out, 'simulated_mrl.csv'), 'rb') as f:
                outputs.append(f.read())
        self.assertEqual(outputs[0], outputs[1])

    def test_select_with_candidates(self):
        code = self.run_cli('select', '--simulate-config', self.sim, '--u-grid', '7.5:10:11',
                            '--candidates', '8.0', '8.5', '9.0', '--format', 'json')
        self.assertEqual(code, 0)
        suggestion = self.read_json('simulated_suggest.json')
        self.assertIn('u_star', suggestion)
        ranked = self.read_json('simulated_select.json')['scores']
        self.assertEqual(len(ranked), 3)
        self.assertEqual(ranked[0]['deviance'], 0.0)

    def test_classify_doa(self):
        self.assertEqual(self.run_cli('classify-doa', '--spec', 'exponential', 'pareto:2', 'uniform'), 0)
        table = pd.read_csv(os.path.join(self.out, 'classify_doa.csv'))
        self.assertEqual(list(table['classified_domain']), ['Gumbel', 'Frechet', 'Weibull'])

    def test_usage_errors(self):
        self.assertEqual(self.run_cli('var', '--simulate-config', 'default', '--u', '8.5', '--q', '1.5'), 2)
        self.assertEqual(self.run_cli('mrl'), 2)
        self.assertEqual(self.run_cli('classify-doa', '--spec', 'cauchy'), 2)
        self.assertEqual(app.main(['no-such-command']), 2)

    def test_data_error_still_writes_manifest(self):
        path = os.path.join(self.tmp.name, 'tiny.csv')
        with open(path, 'w', encoding='utf-8') as f:
            f.write('claim_size\n' + '\n'.join(str(v) for v in (100, 2000, 30000, 400000, 5000000)) + '\n')
        self.assertEqual(self.run_cli('fit', '--input', path, '--u', '5'), 3)
        manifest = self.read_json('run_manifest.json')
        self.assertEqual(manifest['exit_code'], 3)
        self.assertTrue(manifest['error'].startswith('fit_gpd_mle'))


if __name__ == '__main__':
    unittest.main()
