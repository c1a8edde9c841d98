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
"""Simulate, reconstruct and characterise degraded squeezed light."""
import functools
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from configparser import ConfigParser
from typing import (
    Any,
    Callable,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
)

import click
import numpy as np
import torch

from sqztomo import io, seeding
from sqztomo.config import (
    _filter_config,
    as_dict,
    enabled_reconstructors,
    GetListConfigParser,
    run_context,
)
from sqztomo.degradation import (
    fit,
    LevelPoint,
    predict_band,
    purity_vs_antisqueezing,
)
from sqztomo.errors import ContractViolation, InsufficientData, SqztomoError
from sqztomo.fock import DensityMatrix, embed
from sqztomo.homodyne import (
    DEFAULT_RECORD_LENGTH,
    PhaseSchedule,
    QuadratureRecord,
    sample,
    SCHEDULE_KINDS,
)
from sqztomo.metrics import (
    decompose,
    default_axis,
    fidelity,
    match_squeezed_thermal,
    purity,
    purity_from_levels,
    squeezing_levels,
    trace_distance,
    wigner,
)
from sqztomo.models import (
    ReconstructionContext,
    ReconstructionResult,
    RunContext,
    RunManifest,
)
from sqztomo.nn import (
    ArchitectureSpec,
    INPUT_MODES,
    NetworkModel,
    OPTIMIZERS,
    PRESETS,
    train,
    TrainingHistory,
    TrainingOptions,
    TrainingSet,
)
from sqztomo.reconstructors import load_model, RECONSTRUCTORS
from sqztomo.states import degraded_state, draw_training_state, TrainingLimits

LOGGER = logging.getLogger(__name__)

DEFAULT_LENGTHS = '256,512,1024,2048'
DEFAULT_LEVELS = '2,4,6'

T = TypeVar('T')
R = TypeVar('R')


def simulate_state(run_ctx: RunContext,
                   params: Dict[str, float]) -> DensityMatrix:
    """Build the degraded squeezed thermal state params describes."""
    return degraded_state(params, run_ctx.dim, run_ctx.tail_tolerance,
                          run_ctx.phase_noise_mode,
                          channel_order=run_ctx.channel_order)


def simulate_record(run_ctx: RunContext, rho: DensityMatrix, n: int,
                    schedule: PhaseSchedule,
                    index: int = 0) -> QuadratureRecord:
    """Sample record number index of a run."""
    return sample(rho, schedule, n,
                  seeding.generator(run_ctx.seed, 'record', index))


def _map(run_ctx: RunContext, function: Callable[[T], R],
         jobs: Sequence[T]) -> List[R]:
    """Map function over jobs in a worker pool, keeping the job order."""
    if run_ctx.threads <= 1 or len(jobs) <= 1:
        return [function(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=run_ctx.threads) as pool:
        return list(pool.map(function, jobs))


def _corpus_sample(job: Tuple[RunContext, str, int, Dict[str, float],
                              int]) -> Dict[str, Any]:
    """Draw, sample and write one corpus entry."""
    run_ctx, directory, index, limits, length = job
    rng = seeding.generator(run_ctx.seed, 'state', index)
    params, state = draw_training_state(
        rng, TrainingLimits(**limits), run_ctx.dim, run_ctx.tail_tolerance,
        run_ctx.phase_noise_mode, run_ctx.channel_order)
    record = simulate_record(run_ctx, state, length, PhaseSchedule(), index)
    record_name, state_name = io.sample_paths(index)
    io.write_record(record, os.path.join(directory, record_name))
    io.write_density(state, os.path.join(directory, state_name),
                     metadata=params)
    return {'index': index, 'record': record_name, 'state': state_name,
            'params': params}


def generate_corpus(run_ctx: RunContext, directory: str, count: int,
                    limits: TrainingLimits,
                    length: int = DEFAULT_RECORD_LENGTH) -> Dict[str, Any]:
    """
    Write count (record, state) pairs and then their index.

    Sample i only depends on the base seed and i, so the corpus does not
    depend on the number of workers.
    """
    if count < 1:
        raise ContractViolation('corpus needs at least one sample')
    os.makedirs(directory, exist_ok=True)
    jobs = [(run_ctx, directory, index, limits.as_dict(), length)
            for index in range(count)]
    entries = _map(run_ctx, _corpus_sample, jobs)
    io.write_corpus_index(directory, entries, {
        'dim': run_ctx.dim,
        'seed': run_ctx.seed,
        'seed_scheme': seeding.SCHEME,
        'length': length,
        'limits': limits.as_dict(),
        'tail_tolerance': run_ctx.tail_tolerance,
    })
    LOGGER.info('wrote %d samples to %s', count, directory)
    return io.read_corpus_index(directory)


def reconstruct_record(config: GetListConfigParser, run_ctx: RunContext,
                       name: str,
                       record: QuadratureRecord) -> ReconstructionResult:
    """Run one reconstructor plugin against a record."""
    if name not in RECONSTRUCTORS:
        raise ContractViolation('unknown reconstructor {!r}'.format(name))
    section = config['sqztomo:{}'.format(name)]
    reconstructor = RECONSTRUCTORS[name]
    return reconstructor(
        ReconstructionContext(section, run_ctx, record)).reconstruct()


def _common_dim(rho: DensityMatrix,
                sigma: DensityMatrix) -> Tuple[DensityMatrix, DensityMatrix]:
    """Zero-pad the smaller state so both share one truncation."""
    dim = max(rho.dim, sigma.dim)
    return (DensityMatrix(embed(rho.elements, dim)),
            DensityMatrix(embed(sigma.elements, dim)))


def evaluate_state(rho: DensityMatrix,
                   reference: Optional[DensityMatrix] = None,
                   match: bool = False) -> Dict[str, Any]:
    """Collect the figures of merit of rho into a report."""
    levels = squeezing_levels(rho)
    parts = decompose(rho)
    report = {
        'dim': rho.dim,
        'purity': purity(rho),
        'sq_db': levels.sq_db,
        'as_db': levels.as_db,
        'angle_min': levels.angle_min,
        'gaussian_purity': float(purity_from_levels(levels.sq_db,
                                                    levels.as_db)),
        'sigma1': parts.sigma1,
        'sigma_non': parts.sigma_non,
        'ambiguous': parts.ambiguous,
    }  # type: Dict[str, Any]
    if reference is not None:
        a, b = _common_dim(rho, reference)
        report['fidelity'] = fidelity(a, b)
        report['trace_distance'] = trace_distance(a, b)
    if match:
        best = match_squeezed_thermal(parts.residual)
        report['residual_match'] = {
            'r': best.squeeze.r,
            'phi': best.squeeze.phi,
            'nbar': best.thermal.nbar,
            'fidelity': best.fidelity,
        }
    return report


def _compare_cell(job: Tuple[Dict[str, Dict[str, str]], RunContext,
                             List[str], float, int, List[int], float,
                             float]) -> List[Dict[str, Any]]:
    """Reconstruct one simulated state at every record length."""
    config_dict, run_ctx, names, level, cell, lengths, loss, noise = job
    config = GetListConfigParser(allow_no_value=True)
    config.read_dict(config_dict)
    rng = seeding.generator(run_ctx.seed, 'state', cell)
    truth = simulate_state(run_ctx, {
        'sq_db': level, 'phi': rng.uniform(0, 2 * math.pi),
        'loss': loss, 'phase_noise': noise})
    rows = []
    for position, length in enumerate(lengths):
        record = simulate_record(run_ctx, truth, length, PhaseSchedule(),
                                 cell * len(lengths) + position)
        for name in names:
            result = reconstruct_record(config, run_ctx, name, record)
            a, b = _common_dim(result.rho, truth)
            rows.append({'reconstructor': name, 'length': length,
                         'sq_db': level, 'cell': cell,
                         'fidelity': fidelity(a, b),
                         'wall_ms': result.wall_ms})
    return rows


def _summarise(rows: Iterable[Dict[str, Any]],
               keys: Sequence[str]) -> List[Dict[str, Any]]:
    groups = {}  # type: Dict[Tuple[Any, ...], List[Dict[str, Any]]]
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    summary = []
    for group_key in sorted(groups):
        members = groups[group_key]
        fidelities = np.array([m['fidelity'] for m in members])
        entry = dict(zip(keys, group_key))
        entry.update({
            'trials': len(members),
            'mean_fidelity': float(fidelities.mean()),
            'std_fidelity': float(fidelities.std()),
            'mean_wall_ms': float(np.mean([m['wall_ms'] for m in members])),
        })
        summary.append(entry)
    return summary


def compare_reconstructors(config: GetListConfigParser, run_ctx: RunContext,
                           lengths: Sequence[int], levels: Sequence[float],
                           trials: int, loss: float = 0.0,
                           phase_noise: float = 0.0) -> Dict[str, Any]:
    """
    Benchmark every enabled reconstructor on the same simulated records.

    The report holds every cell, the summary per (reconstructor, length,
    level), the length sweep averaged over levels and the level sweep at
    the longest length.
    """
    if not lengths or not levels or trials < 1:
        raise ContractViolation('the comparison sweep is empty')
    names = enabled_reconstructors(config)
    if not names:
        raise ContractViolation('every reconstructor is disabled')
    if 'nn' in names:
        load_model(config['sqztomo:nn'].get('model', ''))
    config_dict = as_dict(config)
    jobs = []
    for level_index, level in enumerate(levels):
        for trial in range(trials):
            jobs.append((config_dict, run_ctx, names, float(level),
                         level_index * trials + trial, list(lengths), loss,
                         phase_noise))
    rows = [row for cell in _map(run_ctx, _compare_cell, jobs)
            for row in cell]
    longest = max(lengths)
    return {
        'reconstructors': names,
        'cells': rows,
        'summary': _summarise(rows, ('reconstructor', 'length', 'sq_db')),
        'by_length': _summarise(rows, ('reconstructor', 'length')),
        'by_level': _summarise([r for r in rows if r['length'] == longest],
                               ('reconstructor', 'sq_db')),
    }


def train_from_corpus(run_ctx: RunContext, corpus: str, preset: str,
                      input_mode: str, options: TrainingOptions,
                      validation_fraction: float,
                      ) -> Tuple[NetworkModel, TrainingHistory]:
    """Train a fresh network of the given preset on a corpus."""
    records, states, metadata = io.read_corpus(corpus)
    if not records:
        raise InsufficientData('corpus {} is empty'.format(corpus))
    layout = PRESETS[preset].as_dict()
    layout.update({'dim': states[0].dim, 'input_mode': input_mode})
    spec = ArchitectureSpec.from_dict(layout)
    data = TrainingSet.from_records(records, states, spec, metadata)
    training, validation = data.split(validation_fraction, run_ctx.seed)
    if len(training) == 0:
        raise InsufficientData('nothing left to train on after holding out '
                               '{:.0%}'.format(validation_fraction))
    model = NetworkModel.create(spec, run_ctx.seed)
    LOGGER.info('training %d weights on %d samples (%d held out)',
                model.parameter_count, len(training), len(validation))
    return train(model, training, options, validation)


def handle_errors(function: Callable[..., None]) -> Callable[..., None]:
    """Turn SqztomoError into a one-line message and its exit code."""
    @functools.wraps(function)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        try:
            function(*args, **kwargs)
        except SqztomoError as exc:
            click.echo('sqztomo: error: {}'.format(exc), err=True)
            sys.exit(exc.exit_code.value)
    return wrapper


def _command_config(ctx: click.Context,
                    seed: Optional[int] = None) -> GetListConfigParser:
    config = ctx.obj  # type: GetListConfigParser
    if seed is not None:
        config.set('sqztomo', 'seed', str(seed))
    return config


def _output(run_ctx: RunContext, path: str) -> str:
    """Resolve an output path against the run's output directory."""
    if not os.path.isabs(path):
        path = os.path.join(run_ctx.out_dir, path)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    return path


def _indexed(path: str, index: int, count: int) -> str:
    if count == 1:
        return path
    stem, extension = os.path.splitext(path)
    return '{}-{:03d}{}'.format(stem, index, extension)


def _write_manifest(run_ctx: RunContext, manifest: RunManifest) -> None:
    manifest.finish()
    path = _output(run_ctx, '{}.manifest.json'.format(manifest.command))
    io.write_json(path, manifest.as_dict())


def _manifest(ctx: click.Context, config: GetListConfigParser,
              run_ctx: RunContext) -> RunManifest:
    arguments = {key: value for key, value in ctx.params.items()}
    return RunManifest(ctx.info_name or '', as_dict(config), run_ctx.seed,
                       arguments)


def _parse_list(kind: Callable[[str], T]) -> Callable[..., List[T]]:
    def callback(ctx: click.Context, param: click.Parameter,
                 value: str) -> List[T]:
        items = [item.strip() for item in value.split(',') if item.strip()]
        if not items:
            raise click.BadParameter('needs at least one value')
        try:
            return [kind(item) for item in items]
        except ValueError as exc:
            raise click.BadParameter(str(exc))
    return callback


def _check_phase_noise(ctx: click.Context, param: click.Parameter,
                       value: float) -> float:
    if not 0 <= value < math.pi / 2:
        raise click.BadParameter('phase noise must be within [0, pi/2)')
    return value


@click.group()
@click.option('--conf', type=click.Path(exists=True, dir_okay=False))
@click.option('--seed', type=click.IntRange(min=0),
              help='Base seed of every random stream.')
@click.option('--dim', type=click.IntRange(min=2),
              help='Fock truncation.')
@click.option('--threads', type=click.IntRange(min=1),
              help='Worker processes (falls back to $SQZTOMO_THREADS).')
@click.option('--out-dir', type=click.Path(file_okay=False),
              help='Directory for relative output paths.')
@click.option('-v', '--verbose', count=True)
@click.pass_context
def main(ctx: click.Context, conf: Optional[str] = None,
         seed: Optional[int] = None, dim: Optional[int] = None,
         threads: Optional[int] = None, out_dir: Optional[str] = None,
         verbose: int = 0) -> None:
    """sqztomo: homodyne tomography of degraded squeezed light."""
    logging.basicConfig(
        level=max(logging.WARNING - 10 * verbose, logging.DEBUG),
        format='%(levelname)s %(name)s: %(message)s')
    config = ConfigParser()
    if conf is not None:
        config.read(conf)
    filtered = _filter_config(config)
    overrides = {'seed': seed, 'dim': dim, 'threads': threads,
                 'out_dir': out_dir}
    for option, value in overrides.items():
        if value is not None:
            filtered.set('sqztomo', option, str(value))
    ctx.obj = filtered


@main.command()
@click.option('--sq-db', type=click.FloatRange(min=0), default=6.0,
              show_default=True, help='Ideal squeezing level in dB.')
@click.option('--phi', type=float, default=0.0, show_default=True)
@click.option('--nbar', type=click.FloatRange(min=0), default=0.0,
              show_default=True)
@click.option('--loss', type=click.FloatRange(0, 1), default=0.0,
              show_default=True)
@click.option('--phase-noise', type=float, default=0.0, show_default=True,
              callback=_check_phase_noise)
@click.option('--n', 'length', type=click.IntRange(min=1),
              default=DEFAULT_RECORD_LENGTH, show_default=True)
@click.option('--count', type=click.IntRange(min=1), default=1,
              show_default=True)
@click.option('--schedule', type=click.Choice(SCHEDULE_KINDS),
              default='linear-scan', show_default=True)
@click.option('--phases', default='0,0.7853981633974483,1.5707963267948966,'
              '2.356194490192345', show_default=True,
              help='Phases of a fixed-set schedule.')
@click.option('--record', default='record.csv', show_default=True)
@click.option('--truth', default='truth.dm', show_default=True)
@click.option('--binary', is_flag=True, help='Write binary records.')
@click.option('--seed', type=click.IntRange(min=0))
@click.pass_context
@handle_errors
def simulate(ctx: click.Context, sq_db: float, phi: float, nbar: float,
             loss: float, phase_noise: float, length: int, count: int,
             schedule: str, phases: str, record: str, truth: str,
             binary: bool, seed: Optional[int]) -> None:
    """Simulate homodyne records of a degraded squeezed state."""
    config = _command_config(ctx, seed)
    run_ctx = run_context(config)
    manifest = _manifest(ctx, config, run_ctx)
    params = {'sq_db': sq_db, 'phi': phi, 'nbar': nbar, 'loss': loss,
              'phase_noise': phase_noise}
    state = simulate_state(run_ctx, params)
    truth_path = _output(run_ctx, truth)
    io.write_density(state, truth_path, metadata=params)
    manifest.outputs.append(truth_path)
    fixed = [float(p) for p in phases.split(',') if p.strip()]
    phase_schedule = PhaseSchedule(schedule, phases=fixed)
    for index in range(count):
        path = _output(run_ctx, _indexed(record, index, count))
        io.write_record(simulate_record(run_ctx, state, length,
                                        phase_schedule, index),
                        path, binary=binary)
        manifest.outputs.append(path)
    _write_manifest(run_ctx, manifest)
    click.echo('wrote {} record(s) and {}'.format(count, truth_path))


@main.command(name='gen-corpus')
@click.option('--count', type=click.IntRange(min=1), required=True)
@click.option('--length', type=click.IntRange(min=1),
              default=DEFAULT_RECORD_LENGTH, show_default=True)
@click.option('--out', default='corpus', show_default=True)
@click.option('--max-sq-db', type=click.FloatRange(min=0), default=8.0,
              show_default=True)
@click.option('--max-nbar', type=click.FloatRange(min=1e-3), default=0.5,
              show_default=True)
@click.option('--max-loss', type=click.FloatRange(0, 1), default=0.3,
              show_default=True)
@click.option('--max-phase-noise', type=float, default=0.1,
              show_default=True, callback=_check_phase_noise)
@click.option('--tail-tolerance', type=click.FloatRange(min=0), default=0.1,
              show_default=True)
@click.option('--seed', type=click.IntRange(min=0))
@click.pass_context
@handle_errors
def gen_corpus(ctx: click.Context, count: int, length: int, out: str,
               max_sq_db: float, max_nbar: float, max_loss: float,
               max_phase_noise: float, tail_tolerance: float,
               seed: Optional[int]) -> None:
    """Generate a training corpus of simulated records and states."""
    config = _command_config(ctx, seed)
    config.set('sqztomo', 'tail_tolerance', str(tail_tolerance))
    run_ctx = run_context(config)
    manifest = _manifest(ctx, config, run_ctx)
    directory = _output(run_ctx, out)
    limits = TrainingLimits(max_sq_db=max_sq_db, max_nbar=max_nbar,
                            max_loss=max_loss,
                            max_phase_noise=max_phase_noise)
    generate_corpus(run_ctx, directory, count, limits, length)
    manifest.outputs.append(os.path.join(directory, io.CORPUS_INDEX))
    _write_manifest(run_ctx, manifest)
    click.echo('wrote {} samples to {}'.format(count, directory))


@main.command(name='reconstruct-mle')
@click.option('--input', 'input_path', required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option('--out', default='rho.dm', show_default=True)
@click.option('--diagnostics')
@click.option('--max-iters', type=click.IntRange(min=1))
@click.pass_context
@handle_errors
def reconstruct_mle(ctx: click.Context, input_path: str, out: str,
                    diagnostics: Optional[str],
                    max_iters: Optional[int]) -> None:
    """Reconstruct a state from a record by maximum likelihood."""
    config = _command_config(ctx)
    if max_iters is not None:
        config.set('sqztomo:mle', 'max_iters', str(max_iters))
    run_ctx = run_context(config)
    manifest = _manifest(ctx, config, run_ctx)
    manifest.inputs.append(input_path)
    result = reconstruct_record(config, run_ctx, 'mle',
                                io.read_record(input_path))
    out_path = _output(run_ctx, out)
    io.write_density(result.rho, out_path,
                     metadata={'method': 'mle',
                               'converged': result.diagnostics['converged']})
    manifest.outputs.append(out_path)
    if diagnostics is not None:
        diagnostics_path = _output(run_ctx, diagnostics)
        io.write_json(diagnostics_path, dict(result.diagnostics,
                                             total_ms=result.wall_ms))
        manifest.outputs.append(diagnostics_path)
    _write_manifest(run_ctx, manifest)
    click.echo('{} iterations, converged: {}'.format(
        result.diagnostics['iterations'], result.diagnostics['converged']))


@main.command(name='train')
@click.option('--corpus', required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option('--epochs', type=click.IntRange(min=0))
@click.option('--batch', type=click.IntRange(min=1))
@click.option('--lr', type=click.FloatRange(min=0))
@click.option('--optimizer', type=click.Choice(OPTIMIZERS))
@click.option('--preset', type=click.Choice(sorted(PRESETS)))
@click.option('--input-mode', type=click.Choice(INPUT_MODES))
@click.option('--out', default='model.bin', show_default=True)
@click.option('--seed', type=click.IntRange(min=0))
@click.pass_context
@handle_errors
def train_command(ctx: click.Context, corpus: str, epochs: Optional[int],
                  batch: Optional[int], lr: Optional[float],
                  optimizer: Optional[str], preset: Optional[str],
                  input_mode: Optional[str], out: str,
                  seed: Optional[int]) -> None:
    """Train a tomography network on a corpus."""
    config = _command_config(ctx, seed)
    overrides = {'epochs': epochs, 'batch': batch, 'lr': lr,
                 'optimizer': optimizer, 'preset': preset,
                 'input_mode': input_mode}
    for option, value in overrides.items():
        if value is not None:
            config.set('sqztomo:training', option, str(value))
    run_ctx = run_context(config)
    torch.set_num_threads(run_ctx.threads)
    manifest = _manifest(ctx, config, run_ctx)
    manifest.inputs.append(corpus)
    section = config['sqztomo:training']
    options = TrainingOptions(
        epochs=section.getint('epochs'), batch=section.getint('batch'),
        lr=section.getfloat('lr'), momentum=section.getfloat('momentum'),
        optimizer=section['optimizer'], seed=run_ctx.seed)
    if section['preset'] not in PRESETS:
        raise ContractViolation('unknown preset {!r}'.format(
            section['preset']))
    model, history = train_from_corpus(
        run_ctx, corpus, section['preset'], section['input_mode'], options,
        section.getfloat('validation_fraction'))
    out_path = _output(run_ctx, out)
    io.write_model(model, out_path)
    io.write_json(out_path + '.history.json', history.as_dict())
    manifest.outputs.extend([out_path, out_path + '.history.json'])
    _write_manifest(run_ctx, manifest)
    final = history.losses[-1] if history.losses else float('nan')
    click.echo('trained {} epochs, final loss {:.6g}{}'.format(
        len(history.losses), final,
        ' (diverged, rolled back)' if history.diverged else ''))


@main.command(name='reconstruct-nn')
@click.option('--model', type=click.Path(dir_okay=False))
@click.option('--input', 'input_path', required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option('--out', default='rho.dm', show_default=True)
@click.option('--time', 'show_time', is_flag=True,
              help='Print the inference wall time.')
@click.pass_context
@handle_errors
def reconstruct_nn(ctx: click.Context, model: Optional[str],
                   input_path: str, out: str, show_time: bool) -> None:
    """Reconstruct a state from a record with a trained network."""
    config = _command_config(ctx)
    if model is not None:
        config.set('sqztomo:nn', 'model', model)
    run_ctx = run_context(config)
    manifest = _manifest(ctx, config, run_ctx)
    manifest.inputs.extend([input_path, config['sqztomo:nn']['model']])
    result = reconstruct_record(config, run_ctx, 'nn',
                                io.read_record(input_path))
    out_path = _output(run_ctx, out)
    io.write_density(result.rho, out_path, metadata={'method': 'nn'})
    manifest.outputs.append(out_path)
    _write_manifest(run_ctx, manifest)
    if show_time:
        click.echo('wall time: {:.2f} ms'.format(
            result.diagnostics['inference_ms']))


@main.command()
@click.option('--rho', required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option('--reference', type=click.Path(exists=True, dir_okay=False))
@click.option('--report', default='report.json', show_default=True)
@click.option('--match', is_flag=True,
              help='Fit a squeezed thermal state to the residual.')
@click.pass_context
@handle_errors
def evaluate(ctx: click.Context, rho: str, reference: Optional[str],
             report: str, match: bool) -> None:
    """Report purity, squeezing levels and decomposition of a state."""
    config = _command_config(ctx)
    run_ctx = run_context(config)
    manifest = _manifest(ctx, config, run_ctx)
    manifest.inputs.append(rho)
    reference_state = None
    if reference is not None:
        reference_state = io.read_density(reference)
        manifest.inputs.append(reference)
    result = evaluate_state(io.read_density(rho), reference_state, match)
    report_path = _output(run_ctx, report)
    io.write_json(report_path, result)
    manifest.outputs.append(report_path)
    _write_manifest(run_ctx, manifest)
    click.echo('purity {purity:.6f}, levels {sq_db:.3f}:{as_db:.3f} dB, '
               'sigma1 {sigma1:.4f}'.format(**result))
    if 'fidelity' in result:
        click.echo('fidelity {:.6f}'.format(result['fidelity']))


@main.command(name='wigner')
@click.option('--rho', required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option('--out', default='wigner.csv', show_default=True)
@click.option('--points', type=click.IntRange(min=3), default=201,
              show_default=True)
@click.option('--extent', type=click.FloatRange(min=0),
              help='Half-width of the grid; sized from the state if unset.')
@click.pass_context
@handle_errors
def wigner_command(ctx: click.Context, rho: str, out: str, points: int,
                   extent: Optional[float]) -> None:
    """Write the Wigner function of a state as (x, p, W) CSV."""
    config = _command_config(ctx)
    run_ctx = run_context(config)
    manifest = _manifest(ctx, config, run_ctx)
    manifest.inputs.append(rho)
    state = io.read_density(rho)
    if extent is not None:
        axis = np.linspace(-extent, extent, points)
    else:
        axis = default_axis(state, points)
    grid = wigner(state, axis, axis)
    out_path = _output(run_ctx, out)
    io.write_csv(out_path, ['x', 'p', 'W'],
                 grid.rows())
    manifest.outputs.append(out_path)
    _write_manifest(run_ctx, manifest)
    click.echo('normalization {:.6f}'.format(grid.normalization()))


@main.command(name='fit-degradation')
@click.option('--points', 'points_path', required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option('--out', default='fit.json', show_default=True)
@click.option('--band')
@click.option('--band-max', type=click.FloatRange(min=0), default=20.0,
              show_default=True, help='Largest ideal squeezing in the band.')
@click.option('--band-points', type=click.IntRange(min=2), default=81,
              show_default=True)
@click.option('--purity-table')
@click.option('--purity-max', type=click.FloatRange(min=0), default=6.0,
              show_default=True,
              help='Largest ideal squeezing in the purity table; its states '
                   'must fit the truncation.')
@click.option('--purity-points', type=click.IntRange(min=2), default=13,
              show_default=True)
@click.option('--sigma-db', type=click.FloatRange(min=0),
              help='Known dB noise of the points.')
@click.pass_context
@handle_errors
def fit_degradation(ctx: click.Context, points_path: str, out: str,
                    band: Optional[str], band_max: float, band_points: int,
                    purity_table: Optional[str], purity_max: float,
                    purity_points: int, sigma_db: Optional[float]) -> None:
    """Fit loss and phase noise to measured squeezing levels."""
    config = _command_config(ctx)
    run_ctx = run_context(config)
    manifest = _manifest(ctx, config, run_ctx)
    manifest.inputs.append(points_path)
    points = io.read_points(points_path)  # type: List[LevelPoint]
    result = fit(points, sigma_db)
    out_path = _output(run_ctx, out)
    io.write_fit(result, out_path)
    manifest.outputs.append(out_path)
    if band is not None:
        band_path = _output(run_ctx, band)
        io.write_csv(band_path, ['ideal_db', 'sq_db', 'sq_lo', 'sq_hi',
                                 'as_db', 'as_lo', 'as_hi'],
                     predict_band(result, np.linspace(0, band_max,
                                                      band_points)).rows())
        manifest.outputs.append(band_path)
    if purity_table is not None:
        table_path = _output(run_ctx, purity_table)
        io.write_csv(table_path, ['ideal_db', 'as_db', 'purity',
                                  'gaussian_purity'],
                     purity_vs_antisqueezing(result,
                                             np.linspace(0, purity_max,
                                                         purity_points),
                                             run_ctx.dim,
                                             run_ctx.tail_tolerance,
                                             run_ctx.phase_noise_mode))
        manifest.outputs.append(table_path)
    _write_manifest(run_ctx, manifest)
    click.echo('L = {:.4f}, theta = {:.4f} rad, rms {:.3f} dB{}'.format(
        result.loss, result.theta, result.residual_rms,
        '' if result.converged else ' (not converged)'))


@main.command()
@click.option('--lengths', default=DEFAULT_LENGTHS, show_default=True,
              callback=_parse_list(int))
@click.option('--levels', default=DEFAULT_LEVELS, show_default=True,
              callback=_parse_list(float), help='Ideal squeezing in dB.')
@click.option('--trials', type=click.IntRange(min=1), default=5,
              show_default=True)
@click.option('--loss', type=click.FloatRange(0, 1), default=0.0,
              show_default=True)
@click.option('--phase-noise', type=float, default=0.0, show_default=True,
              callback=_check_phase_noise)
@click.option('--model', type=click.Path(dir_okay=False))
@click.option('--report', default='compare.json', show_default=True)
@click.option('--csv', 'csv_path', default='compare.csv', show_default=True)
@click.option('--seed', type=click.IntRange(min=0))
@click.pass_context
@handle_errors
def compare(ctx: click.Context, lengths: List[int], levels: List[float],
            trials: int, loss: float, phase_noise: float,
            model: Optional[str], report: str, csv_path: str,
            seed: Optional[int]) -> None:
    """Compare reconstructors across record lengths and squeezing."""
    config = _command_config(ctx, seed)
    if model is not None:
        config.set('sqztomo:nn', 'model', model)
    run_ctx = run_context(config)
    manifest = _manifest(ctx, config, run_ctx)
    result = compare_reconstructors(config, run_ctx, lengths, levels, trials,
                                    loss, phase_noise)
    report_path = _output(run_ctx, report)
    io.write_json(report_path, result)
    table_path = _output(run_ctx, csv_path)
    columns = ['reconstructor', 'length', 'sq_db', 'trials', 'mean_fidelity',
               'std_fidelity', 'mean_wall_ms']
    io.write_csv(table_path, columns,
                 [[row[c] for c in columns] for row in result['summary']])
    manifest.outputs.extend([report_path, table_path])
    _write_manifest(run_ctx, manifest)
    for row in result['by_length']:
        click.echo('{reconstructor} n={length}: fidelity {mean_fidelity:.4f}'
                   ' +/- {std_fidelity:.4f}, {mean_wall_ms:.1f} ms'.format(
                       **row))


if __name__ == '__main__':
    main()  # pragma: nocover
