# Copyright (C) 2024  The sqztomo authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import os
import subprocess
from collections import namedtuple
from glob import iglob

import pytest
import yaml


class IntegrationTestRunner:

    environment = {}

    def __init__(self, command):
        self.command = command

    def run_test_command(self, args, cwd):
        env = dict(os.environ, **self.environment)
        process = subprocess.run([self.command] + args, cwd=cwd, env=env,
                                 stdout=subprocess.PIPE,
                                 stderr=subprocess.STDOUT)
        return process.returncode, process.stdout.decode('utf-8')

    def run_test(self, tmpdir, commands, config, files=None):
        for name, content in (files or {}).items():
            tmpdir.join(name).write(content, ensure=True)
        prefix = []
        if config is not None:
            tmpdir.join('sqztomo.ini').write(config)
            prefix = ['--conf', 'sqztomo.ini']
        exit_code, output = 0, ''
        for args in commands:
            exit_code, output = self.run_test_command(
                prefix + [str(arg) for arg in args], str(tmpdir))
            if exit_code != 0:
                break
        return exit_code, output


class DirectRunner(IntegrationTestRunner):
    environment = {'SQZTOMO_THREADS': '1'}


class PooledRunner(IntegrationTestRunner):
    environment = {'SQZTOMO_THREADS': '2'}


RUNNERS = {
    'direct': DirectRunner,
    'pooled': PooledRunner,
}


@pytest.fixture(params=sorted(RUNNERS))
def runner(request, integration_testcase):
    if request.param in (integration_testcase.runners_to_skip or []):
        pytest.skip('{} runner not used for this case'.format(request.param))
    return RUNNERS[request.param](
        request.config.getoption('sqztomo_command'))


def test_integration(runner, tmpdir, integration_testcase):
    exit_code, output = runner.run_test(
        tmpdir, integration_testcase.commands, integration_testcase.config,
        integration_testcase.files)
    if integration_testcase.expected_output is not None:
        assert integration_testcase.expected_output == output
    for fragment in integration_testcase.expected_output_contains or []:
        assert fragment in output
    assert integration_testcase.expect_exit == exit_code, output
    for path in integration_testcase.expected_files or []:
        assert tmpdir.join(path).check(), path


CASE_FIELDS = {
    'commands': True,
    'expect_exit': True,
    'expected_output': False,
    'expected_output_contains': False,
    'expected_files': False,
    'config': False,
    'files': False,
    'runners_to_skip': False,
}

IntegrationTestcase = namedtuple(
    'IntegrationTestcase', ['test_name'] + sorted(CASE_FIELDS))


def _build_case(source, case_dict, defaults):
    name = case_dict.get('name')
    if not name or not case_dict.get('description'):
        raise ValueError(
            '{}: every case needs a name and a description'.format(source))
    merged = dict(defaults, **{key: value for key, value in case_dict.items()
                               if value is not None})
    missing = [field for field, required in CASE_FIELDS.items()
               if required and field not in merged]
    if missing:
        raise ValueError('{}: case {} is missing {}'.format(
            source, name, ', '.join(sorted(missing))))
    return IntegrationTestcase(
        test_name=name, **{field: merged.get(field) for field in CASE_FIELDS})


def _load_testcases(test_dir):
    seen = {}
    for path in sorted(iglob(os.path.join(test_dir, 'test_*.yaml'))):
        with open(path) as stream:
            data = yaml.safe_load(stream)
        for case_dict in data['cases']:
            testcase = _build_case(path, case_dict, data.get('defaults', {}))
            if testcase.test_name in seen:
                raise ValueError('{}: {} already defined in {}'.format(
                    path, testcase.test_name, seen[testcase.test_name]))
            seen[testcase.test_name] = path
            yield testcase


def pytest_generate_tests(metafunc):
    if 'integration_testcase' not in metafunc.fixturenames:
        return
    test_dir = os.path.dirname(os.path.abspath(__file__))
    metafunc.parametrize('integration_testcase',
                         list(_load_testcases(test_dir)),
                         ids=lambda testcase: testcase.test_name)
