# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import importlib.resources
import os
import tempfile
import unittest

from pychase._config import ConfigError, load_config, normalize_key


def get_data_path(name):
    return str(importlib.resources.files('pychase.tests') / 'data' / name)


class LoadConfigTests(unittest.TestCase):
    def test_fixture(self):
        config = load_config(get_data_path('config.yml'))
        self.assertEqual(config, {'nev': 4, 'nex': 4, 'tol': 1e-10,
                                  'deg': 10, 'max_iter': 30, 'qr': 'auto',
                                  'grid': '2x1', 'lanczos_steps': 20})

    def test_allowed_keys(self):
        with self.assertRaisesRegex(ConfigError, 'lanczos_steps'):
            load_config(get_data_path('config.yml'),
                        allowed=('nev', 'nex', 'tol', 'deg', 'max_iter',
                                 'qr', 'grid'))

    def test_empty_file(self):
        with tempfile.TemporaryDirectory() as output_dir:
            path = os.path.join(output_dir, 'empty.yml')
            open(path, 'w').close()
            self.assertEqual(load_config(path), {})

    def test_not_a_mapping(self):
        with tempfile.TemporaryDirectory() as output_dir:
            path = os.path.join(output_dir, 'list.yml')
            with open(path, 'w') as fh:
                fh.write('- nev\n- nex\n')
            with self.assertRaisesRegex(ConfigError, 'mapping'):
                load_config(path)

    def test_invalid_yaml(self):
        with tempfile.TemporaryDirectory() as output_dir:
            path = os.path.join(output_dir, 'bad.yml')
            with open(path, 'w') as fh:
                fh.write('nev: [4\n')
            with self.assertRaisesRegex(ConfigError, 'not valid YAML'):
                load_config(path)

    def test_missing_file(self):
        with self.assertRaises(OSError):
            load_config('/nonexistent/pychase.yml')


class NormalizeKeyTests(unittest.TestCase):
    def test_flag_names(self):
        self.assertEqual(normalize_key('--deg-max'), 'deg_max')
        self.assertEqual(normalize_key('max-iter'), 'max_iter')
        self.assertEqual(normalize_key('nev'), 'nev')


if __name__ == '__main__':
    unittest.main()
