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

"""
The ``paas`` command: synthesize datasets, compute DOLP images, train and
evaluate.
"""

import os
import logging

import click

from ._version import __version__
from ._exceptions import PaasException
from ._polar import MosaicFrame, MosaicPattern, demosaic, stokes, dolp, \
    DEFAULT_PATTERN, DOLP_MODES, DEMOSAIC_METHODS, DEMOSAIC_BILINEAR, \
    DOLP_NORMALIZED
from ._image_io import read_pgm, write_pgm, write_pfm
from ._profile_file import _load_yaml_file
from ._manifest import DatasetManifest, CHANNELS
from ._experiment_file import ExperimentConfig
from ._eval import run_synth, run_train, run_eval

__all__ = ['cli']

LOG = logging.getLogger(__name__)

LOG_LEVELS = ('debug', 'info', 'warning', 'error')

CHANNEL_CHOICES = list(CHANNELS) + ['s0']


def _load_config(filepath):
    """
    Load the --config file: an experiment file, or a profile pack file that
    is used with the default experiment settings. `None` returns the
    default experiment.
    """
    if filepath is None:
        return ExperimentConfig()
    data = _load_yaml_file(filepath, 'config file')
    if isinstance(data, dict) and 'profiles' in data:
        return ExperimentConfig({'profile_pack': os.path.abspath(filepath)})
    return ExperimentConfig.from_file(filepath)


def _pattern_option(func):
    return click.option(
        '--pattern', metavar='PATTERN', default=None,
        help="Mosaic pattern of the sensor as rows of angles, e.g. "
        "'0,45;90,135' (the default).")(func)


@click.group(context_settings={'help_option_names': ['-h', '--help']})
@click.option('--log-level', type=click.Choice(LOG_LEVELS),
              default='warning', show_default=True,
              help="Level of log messages written to stderr.")
@click.version_option(version=__version__, message='%(prog)s %(version)s')
def cli(log_level):
    """
    Polarization-based face presentation attack detection.
    """
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


@cli.command('synth')
@click.option('--config', 'config_file', metavar='FILE', default=None,
              help="Experiment file or profile pack file. Default: the "
              "built-in default experiment.")
@click.option('--out', 'out_dir', metavar='DIR', default=None,
              help="Output directory of the dataset. Default: the 'data' "
              "directory of the experiment.")
@click.option('--seed', type=int, default=None,
              help="Seed of the dataset generation.")
@click.option('--count', type=int, default=None,
              help="Number of samples per material profile.")
@click.option('--width', type=int, default=None, help="Image width.")
@click.option('--height', type=int, default=None, help="Image height.")
@_pattern_option
def cmd_synth(config_file, out_dir, seed, count, width, height, pattern):
    """
    Generate a labeled synthetic dataset.
    """
    try:
        config = _load_config(config_file)
        dataset = {}
        for key, value in (('seed', seed), ('count_per_profile', count),
                           ('width', width), ('height', height),
                           ('pattern', pattern)):
            if value is not None:
                dataset[key] = value
        if dataset:
            config = config.replace(dataset=dataset)
        manifest = run_synth(config, out_dir)
    except PaasException as exc:
        raise click.ClickException(str(exc))
    click.echo("Manifest: {}".format(manifest.filepath))
    for label, count in manifest.count_by_label().items():
        click.echo("{}: {}".format(label, count))


@cli.command('dolp')
@click.argument('mosaic_file', metavar='MOSAIC')
@click.option('--out', 'out_file', metavar='FILE', required=True,
              help="Output PFM file for the DOLP image.")
@_pattern_option
@click.option('--dolp-mode', type=click.Choice(list(DOLP_MODES) +
                                               ['paper-literal']),
              default=DOLP_NORMALIZED, show_default=True,
              help="DOLP formula.")
@click.option('--method', type=click.Choice(DEMOSAIC_METHODS),
              default=DEMOSAIC_BILINEAR, show_default=True,
              help="Demosaicing method.")
@click.option('--angles-out', 'angles_dir', metavar='DIR', default=None,
              help="Directory for the four demosaicked angle images "
              "(i0.pgm, i45.pgm, i90.pgm, i135.pgm).")
def cmd_dolp(mosaic_file, out_file, pattern, dolp_mode, method, angles_dir):
    """
    Compute the DOLP image of a mosaic PGM image.
    """
    try:
        plane, bits = read_pgm(mosaic_file)
        mosaic_pattern = MosaicPattern.parse(pattern) if pattern \
            else DEFAULT_PATTERN
        angles = demosaic(MosaicFrame(plane, mosaic_pattern), method)
        image = dolp(stokes(angles), dolp_mode)
        write_pfm(out_file, image.values)
    except PaasException as exc:
        raise click.ClickException(str(exc))
    if angles_dir:
        try:
            os.makedirs(angles_dir, exist_ok=True)
        except OSError as exc:
            raise click.ClickException(
                "Cannot create directory {}: {}".format(angles_dir, exc))
        try:
            for angle in (0, 45, 90, 135):
                write_pgm(os.path.join(angles_dir, 'i{}.pgm'.format(angle)),
                          angles.plane(angle), bits)
        except PaasException as exc:
            raise click.ClickException(str(exc))
    values = image.values
    click.echo("DOLP min {:.6f} mean {:.6f} max {:.6f}".format(
        float(values.min()), float(values.mean()), float(values.max())))


@cli.command('train')
@click.option('--config', 'config_file', metavar='FILE', default=None,
              help="Experiment file. Default: the built-in default "
              "experiment.")
@click.option('--manifest', 'manifest_file', metavar='FILE', required=True,
              help="Manifest of the dataset.")
@click.option('--out', 'out_dir', metavar='DIR', default=None,
              help="Output directory of the checkpoints and loss logs. "
              "Default: the 'checkpoints' directory of the experiment.")
@click.option('--channel', type=click.Choice(CHANNEL_CHOICES),
              default=None,
              help="Train on this channel only. Default: the channels of the "
              "experiment.")
@click.option('--epochs', type=int, default=None,
              help="Number of training epochs of the embedding network.")
@click.option('--seed', type=int, default=None,
              help="Seed of the training.")
def cmd_train(config_file, manifest_file, out_dir, channel, epochs, seed):
    """
    Train the embedding network and the SVM on the training split.
    """
    try:
        config = _load_config(config_file)
        train = {}
        if epochs is not None:
            train['epochs'] = epochs
        if seed is not None:
            train['seed'] = seed
        if train:
            config = config.replace(train=train)
        manifest = DatasetManifest.load(manifest_file)
        models = run_train(config, manifest, out_dir,
                           [channel] if channel else None)
    except PaasException as exc:
        raise click.ClickException(str(exc))
    for name, (model, _) in models.items():
        if model.loss_history:
            click.echo("{}: final loss {:.6f}".format(
                name, model.loss_history[-1][1]))
        else:
            click.echo("{}: no training epochs".format(name))


@cli.command('eval')
@click.option('--config', 'config_file', metavar='FILE', default=None,
              help="Experiment file. Default: the built-in default "
              "experiment.")
@click.option('--manifest', 'manifest_file', metavar='FILE', required=True,
              help="Manifest of the dataset.")
@click.option('--checkpoints', 'checkpoint_dir', metavar='DIR',
              default=None,
              help="Directory of the checkpoints. Default: the "
              "'checkpoints' directory of the experiment.")
@click.option('--out', 'out_dir', metavar='DIR', default=None,
              help="Output directory of the report CSV files. Default: the "
              "'report' directory of the experiment.")
@click.option('--channel', type=click.Choice(CHANNEL_CHOICES),
              default=None,
              help="Evaluate this channel only. Default: the channels of "
              "the experiment.")
def cmd_eval(config_file, manifest_file, checkpoint_dir, out_dir, channel):
    """
    Evaluate the pipeline and the baselines on the test split.
    """
    try:
        config = _load_config(config_file)
        manifest = DatasetManifest.load(manifest_file)
        rows = run_eval(config, manifest, checkpoint_dir, out_dir,
                        [channel] if channel else None)
    except PaasException as exc:
        raise click.ClickException(str(exc))
    for row in rows:
        click.echo("{r.channel:5} {r.method:9} EER {r.eer:.4f}  "
                   "TPR@1e-2 {r.tpr_at_1e2:.4f}  TPR@1e-3 {r.tpr_at_1e3:.4f}".
                   format(r=row))
