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
Evaluation: scores, ROC curves, equal error rate, true positive rates at
fixed false positive rates, and the evaluation of the pipeline and of the
handcrafted baselines on a test split.

Genuine samples are the positive class; higher scores mean more genuine.
"""

import os
import csv
import logging
from collections import namedtuple, OrderedDict

import numpy as np

from ._exceptions import DataError, ParameterError
from ._manifest import normalize_channel, SPLIT_TRAIN, SPLIT_TEST
from ._features import stat_triple, lbp_histogram, write_feature_csv
from ._embed_net import preprocess, embed_images, train_siamese, \
    write_loss_log, save_model, load_model
from ._svm import train_svm, save_svm, load_svm
from ._synth import generate_dataset
from ._parallel import ordered_map

__all__ = ['ScoreEntry', 'ScoreSet', 'RocCurve', 'ReportRow',
           'EvaluationResult', 'roc', 'eer', 'tpr_at_fpr', 'evaluate_scores',
           'compute_embeddings', 'evaluate_pipeline',
           'evaluate_scalar_baseline', 'evaluate_lbp_baseline',
           'write_stat_dump', 'write_report_csv', 'read_report_csv',
           'write_roc_csv',
           'METHOD_MEAN', 'METHOD_STD', 'METHOD_KURTOSIS', 'METHOD_LBP',
           'METHOD_PAAS', 'METHODS', 'REPORT_COLUMNS', 'checkpoint_paths',
           'run_synth', 'run_train', 'run_eval', 'run_experiment']

LOG = logging.getLogger(__name__)

METHOD_MEAN = 'mean'
METHOD_STD = 'std'
METHOD_KURTOSIS = 'kurtosis'
METHOD_LBP = 'lbp'
METHOD_PAAS = 'paas'
METHODS = (METHOD_MEAN, METHOD_STD, METHOD_KURTOSIS, METHOD_LBP, METHOD_PAAS)
SCALAR_METHODS = (METHOD_MEAN, METHOD_STD, METHOD_KURTOSIS)

REPORT_COLUMNS = ('channel', 'method', 'eer', 'tpr_at_1e2', 'tpr_at_1e3')


class ScoreEntry(namedtuple('ScoreEntry', ['sample_id', 'genuine', 'score'])):
    """
    The score of one test sample and whether the sample is genuine.
    """
    __slots__ = ()


class ScoreSet(object):
    """
    The scores of the samples of a test set.
    """

    def __init__(self, entries=()):
        self._entries = [ScoreEntry(sid, bool(g), float(s))
                         for sid, g, s in entries]

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __repr__(self):
        return "ScoreSet(genuine={}, attack={})".format(
            len(self.genuine_scores), len(self.attack_scores))

    @classmethod
    def from_arrays(cls, sample_ids, genuine, scores):
        """
        Create a score set from parallel sequences.
        """
        return cls(zip(sample_ids, genuine, scores))

    def add(self, sample_id, genuine, score):
        """
        Add the score of a sample.
        """
        self._entries.append(
            ScoreEntry(sample_id, bool(genuine), float(score)))

    @property
    def entries(self):
        """
        list of :class:`ScoreEntry`: The scores in insertion order.
        """
        return list(self._entries)

    @property
    def genuine_scores(self):
        """
        numpy.ndarray: Scores of the genuine samples.
        """
        return np.array([e.score for e in self._entries if e.genuine])

    @property
    def attack_scores(self):
        """
        numpy.ndarray: Scores of the attack samples.
        """
        return np.array([e.score for e in self._entries if not e.genuine])


class RocCurve(namedtuple('RocCurve', ['fpr', 'tpr', 'thresholds'])):
    """
    A receiver operating characteristic curve as arrays of false positive
    rates, true positive rates and the thresholds they were obtained with
    (a sample is accepted as genuine if its score >= threshold).

    The curve starts at (0, 0) with threshold +inf and ends at (1, 1).
    """
    __slots__ = ()


ReportRow = namedtuple('ReportRow', list(REPORT_COLUMNS))

EvaluationResult = namedtuple('EvaluationResult', ['row', 'scores', 'curve'])


def roc(scores):
    """
    Compute the ROC curve of a score set by sweeping the threshold over the
    distinct scores in descending order.

    Parameters:

      scores (ScoreSet): Scores with at least one genuine and one attack
        sample.

    Returns:
      RocCurve: The curve.

    Raises:
      DataError: No genuine or no attack samples.
    """
    genuine = np.sort(scores.genuine_scores)
    attack = np.sort(scores.attack_scores)
    if genuine.size == 0 or attack.size == 0:
        raise DataError(
            "ROC needs genuine and attack samples, got {} genuine and {} "
            "attack samples".format(genuine.size, attack.size))
    thresholds = np.unique(np.concatenate([genuine, attack]))[::-1]
    tp = genuine.size - np.searchsorted(genuine, thresholds, side='left')
    fp = attack.size - np.searchsorted(attack, thresholds, side='left')
    return RocCurve(
        fpr=np.concatenate([[0.0], fp / attack.size]),
        tpr=np.concatenate([[0.0], tp / genuine.size]),
        thresholds=np.concatenate([[np.inf], thresholds]))


def eer(curve):
    """
    Return the equal error rate of a ROC curve: the rate at which the false
    positive rate equals the false negative rate (1 - TPR), linearly
    interpolated between the two curve points enclosing the crossing.
    """
    fpr = np.asarray(curve.fpr, dtype=np.float64)
    fnr = 1.0 - np.asarray(curve.tpr, dtype=np.float64)
    # fpr - fnr is nondecreasing along the curve, from -1 to +1
    gap = fpr - fnr
    k = int(np.argmax(gap >= 0))
    if gap[k] == 0 or k == 0:
        return float(fpr[k])
    alpha = -gap[k - 1] / (gap[k] - gap[k - 1])
    return float(fpr[k - 1] + alpha * (fpr[k] - fpr[k - 1]))


def tpr_at_fpr(curve, target):
    """
    Return the true positive rate of a ROC curve at a false positive rate.

    If the curve has points at exactly the target rate, the largest true
    positive rate among them is returned. Otherwise the true positive rate
    is linearly interpolated between the last point below and the first
    point above the target.

    Raises:
      ParameterError: Target outside of [0, 1].
    """
    if not 0 <= target <= 1:
        raise ParameterError(
            "Target false positive rate must be in [0, 1], got {}".
            format(target))
    fpr = np.asarray(curve.fpr, dtype=np.float64)
    tpr = np.asarray(curve.tpr, dtype=np.float64)
    exact = fpr == target
    if np.any(exact):
        return float(tpr[exact].max())
    lo = int(np.flatnonzero(fpr < target)[-1])
    hi = int(np.flatnonzero(fpr > target)[0])
    alpha = (target - fpr[lo]) / (fpr[hi] - fpr[lo])
    return float(tpr[lo] + alpha * (tpr[hi] - tpr[lo]))


def evaluate_scores(scores, channel, method):
    """
    Evaluate a score set.

    Returns:
      EvaluationResult: Report row, the scores and the ROC curve.

    Raises:
      DataError: No genuine or no attack samples.
    """
    curve = roc(scores)
    row = ReportRow(channel, method, eer(curve), tpr_at_fpr(curve, 1e-2),
                    tpr_at_fpr(curve, 1e-3))
    LOG.info("Evaluated %s on channel %s: EER %.4f, TPR@FPR=1e-2 %.4f, "
             "TPR@FPR=1e-3 %.4f", method, channel, row.eer, row.tpr_at_1e2,
             row.tpr_at_1e3)
    return EvaluationResult(row, scores, curve)


def _load_planes(manifest, channel):
    return ordered_map(lambda r: r.load_channel(channel), manifest.records)


def _score_set(manifest, scores):
    records = manifest.records
    return ScoreSet.from_arrays([r.sample_id for r in records],
                                [r.is_genuine for r in records], scores)


def compute_embeddings(model, manifest, channel, config):
    """
    Return the embeddings of the samples of a manifest as an array of shape
    (N, embedding_dim), using the evaluation preprocessing.
    """
    records = manifest.records
    planes = _load_planes(manifest, channel)
    tensors = [preprocess(p, r.crop, config, training=False)
               for p, r in zip(planes, records)]
    return embed_images(model, tensors)


def evaluate_pipeline(model, svm, manifest, channel, config):
    """
    Evaluate the pipeline (embedding network and SVM) on a test split; the
    score of a sample is the SVM decision value of its embedding.

    Parameters:

      model (EmbeddingModel): Trained network.

      svm (SvmModel): SVM trained on embeddings of the training split.

      manifest (DatasetManifest): Test samples.

      channel (string): 'dolp' or 'gray'.

      config (TrainConfig): Preprocessing sizes.

    Returns:
      EvaluationResult: Report row, scores and ROC curve.

    Raises:
      DataError: No genuine or no attack samples.
    """
    channel = normalize_channel(channel)
    embeddings = compute_embeddings(model, manifest, channel, config)
    scores = svm.decision(embeddings) if len(embeddings) else []
    return evaluate_scores(_score_set(manifest, scores), channel, METHOD_PAAS)


def _stat_values(manifest, channel, method):
    planes = _load_planes(manifest, channel)
    return np.array([getattr(stat_triple(p, r.crop), method)
                     for p, r in zip(planes, manifest.records)])


def evaluate_scalar_baseline(train_manifest, test_manifest, channel, method):
    """
    Evaluate a scalar statistic of the face region ('mean', 'std' or
    'kurtosis') used directly as score.

    The sign of the score is chosen on the training split so that genuine
    samples score higher on average.

    Raises:
      ParameterError: Unknown method.
      DataError: Degenerate region statistics, or a split without genuine
        or attack samples.
    """
    if method not in SCALAR_METHODS:
        raise ParameterError(
            "Invalid scalar baseline {!r}; valid are {}".
            format(method, SCALAR_METHODS))
    channel = normalize_channel(channel)
    train_values = _stat_values(train_manifest, channel, method)
    genuine = np.array([r.is_genuine for r in train_manifest.records])
    if not genuine.any() or genuine.all():
        raise DataError(
            "Training split must contain genuine and attack samples")
    sign = 1.0 if train_values[genuine].mean() >= \
        train_values[~genuine].mean() else -1.0
    LOG.debug("Scalar baseline %s on channel %s: orientation %+d", method,
              channel, sign)
    test_values = _stat_values(test_manifest, channel, method)
    return evaluate_scores(_score_set(test_manifest, sign * test_values),
                           channel, method)


def _lbp_features(manifest, channel):
    planes = _load_planes(manifest, channel)
    return np.array([lbp_histogram(p, r.crop).values
                     for p, r in zip(planes, manifest.records)])


def evaluate_lbp_baseline(train_manifest, test_manifest, channel,
                          svm_config=None):
    """
    Evaluate LBP histograms of the face region with a linear SVM trained on
    the training split.

    Raises:
      DataError: A split without genuine or attack samples.
    """
    channel = normalize_channel(channel)
    svm = train_svm(_lbp_features(train_manifest, channel),
                    [r.binary_label for r in train_manifest.records],
                    svm_config)
    scores = svm.decision(_lbp_features(test_manifest, channel))
    return evaluate_scores(_score_set(test_manifest, scores), channel,
                           METHOD_LBP)


def write_stat_dump(filepath, manifest, channel):
    """
    Write the mean, standard deviation and kurtosis of the face region of
    every sample of a manifest as feature CSV file, one row per sample and
    statistic.

    Raises:
      DataError: Degenerate region statistics.
    """
    channel = normalize_channel(channel)
    planes = _load_planes(manifest, channel)
    rows = []
    for plane, record in zip(planes, manifest.records):
        stats = stat_triple(plane, record.crop)
        for name in stats._fields:
            rows.append((record.sample_id, record.label,
                         stats.feature(name)))
    write_feature_csv(filepath, rows)


def write_report_csv(filepath, rows):
    """
    Write report rows as CSV file with the columns
    channel,method,eer,tpr_at_1e2,tpr_at_1e3.
    """
    with open(filepath, 'w', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp, lineterminator='\n')
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow([row.channel, row.method, repr(float(row.eer)),
                             repr(float(row.tpr_at_1e2)),
                             repr(float(row.tpr_at_1e3))])


def read_report_csv(filepath):
    """
    Read a report CSV file written by :func:`write_report_csv`.

    Returns:
      list of ReportRow: The rows.

    Raises:
      DataError: Missing or unexpected columns.
    """
    with open(filepath, 'r', encoding='utf-8', newline='') as fp:
        reader = csv.DictReader(fp)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise DataError(
                "Report file {} has columns {}, expected {}".
                format(filepath, reader.fieldnames, REPORT_COLUMNS))
        return [ReportRow(r['channel'], r['method'], float(r['eer']),
                          float(r['tpr_at_1e2']), float(r['tpr_at_1e3']))
                for r in reader]


def write_roc_csv(filepath, curve):
    """
    Write a ROC curve as CSV file with the columns fpr,tpr,threshold.
    The first threshold is written as 'inf'.
    """
    with open(filepath, 'w', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp, lineterminator='\n')
        writer.writerow(['fpr', 'tpr', 'threshold'])
        for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds):
            writer.writerow([repr(float(f)), repr(float(t)),
                             repr(float(th))])


def _makedirs(path):
    try:
        os.makedirs(path, exist_ok=True)
    except (OSError, IOError) as exc:
        new_exc = DataError(
            "Cannot create output directory: {d}: {exc}".
            format(d=path, exc=exc))
        new_exc.__cause__ = None
        raise new_exc  # DataError


def checkpoint_paths(checkpoint_dir, channel):
    """
    Return the path names (embedding checkpoint, SVM checkpoint, loss log)
    for a channel in a checkpoint directory.
    """
    return (os.path.join(checkpoint_dir, 'embedding_{}.ckpt'.format(channel)),
            os.path.join(checkpoint_dir, 'svm_{}.ckpt'.format(channel)),
            os.path.join(checkpoint_dir, 'loss_{}.csv'.format(channel)))


def run_synth(config, out_dir=None, workers=None):
    """
    Generate the dataset of an experiment.

    Parameters:

      config (ExperimentConfig): The experiment.

      out_dir (:term:`unicode string`): Dataset directory, or `None` for the
        experiment's data directory.

      workers (int): Number of worker threads, or `None`.

    Returns:
      DatasetManifest: The manifest, saved in the dataset directory.
    """
    pack = config.profile_pack()
    return generate_dataset(
        pack.profiles, config.count_per_profile, config.dims,
        config.split_ratio, out_dir or config.data_dir, config.seed,
        config.pattern, config.demosaic, config.bits, workers)


def run_train(config, manifest, checkpoint_dir=None, channels=None):
    """
    Train the embedding network and the SVM on the training split of a
    manifest, for each channel, and write the checkpoints and loss logs.

    Returns:
      dict: (EmbeddingModel, SvmModel) by channel.

    Raises:
      DataError: Training split with only one class.
    """
    checkpoint_dir = checkpoint_dir or config.checkpoint_dir
    _makedirs(checkpoint_dir)
    train = manifest.split(SPLIT_TRAIN)
    labels = [r.binary_label for r in train.records]
    if len(train.binary_classes()) < 2:
        raise DataError(
            "Training split must contain genuine and attack samples")
    train_config = config.train_config
    models = OrderedDict()
    for channel in channels or config.channels:
        channel = normalize_channel(channel)
        model = train_siamese(train, train_config, channel)
        embeddings = compute_embeddings(model, train, channel, train_config)
        svm = train_svm(embeddings, labels, config.svm_config)
        embed_path, svm_path, loss_path = checkpoint_paths(
            checkpoint_dir, channel)
        save_model(model, embed_path, train_config)
        save_svm(svm, svm_path, config.svm_config)
        write_loss_log(loss_path, model.loss_history)
        LOG.info("Wrote checkpoints for channel %s to %s", channel,
                 checkpoint_dir)
        models[channel] = (model, svm)
    return models


def run_eval(config, manifest, checkpoint_dir=None, report_dir=None,
             channels=None):
    """
    Evaluate the methods of an experiment on the test split of a manifest,
    for each channel, and write ``report.csv`` and one
    ``roc_<method>_<channel>.csv`` per row into the report directory.
    When a statistic baseline is evaluated, the per-sample mean, standard
    deviation and kurtosis of all samples are dumped into
    ``features_<channel>.csv``.

    Returns:
      list of ReportRow: The report rows, by channel and then by method.

    Raises:
      CheckpointFileError: Missing or invalid checkpoint.
      DataError: Split without genuine or attack samples.
    """
    checkpoint_dir = checkpoint_dir or config.checkpoint_dir
    report_dir = report_dir or config.report_dir
    train = manifest.split(SPLIT_TRAIN)
    test = manifest.split(SPLIT_TEST)
    rows = []
    results = []
    for channel in channels or config.channels:
        channel = normalize_channel(channel)
        for method in config.methods:
            if method in SCALAR_METHODS:
                result = evaluate_scalar_baseline(train, test, channel, method)
            elif method == METHOD_LBP:
                result = evaluate_lbp_baseline(train, test, channel,
                                               config.svm_config)
            else:
                embed_path, svm_path, _ = checkpoint_paths(
                    checkpoint_dir, channel)
                model, train_config = load_model(embed_path)
                svm = load_svm(svm_path)
                result = evaluate_pipeline(
                    model, svm, test, channel,
                    train_config or config.train_config)
            rows.append(result.row)
            results.append(result)
    _makedirs(report_dir)
    write_report_csv(os.path.join(report_dir, 'report.csv'), rows)
    for result in results:
        write_roc_csv(
            os.path.join(report_dir, 'roc_{}_{}.csv'.format(
                result.row.method, result.row.channel)),
            result.curve)
    if any(m in SCALAR_METHODS for m in config.methods):
        for channel in channels or config.channels:
            channel = normalize_channel(channel)
            write_stat_dump(
                os.path.join(report_dir, 'features_{}.csv'.format(channel)),
                manifest, channel)
    return rows


def run_experiment(config, workers=None):
    """
    Run a complete experiment: generate the dataset, train and evaluate.

    The effective experiment is written as ``experiment.yml`` into the
    report directory.

    Returns:
      list of ReportRow: The report rows.
    """
    manifest = run_synth(config, workers=workers)
    if METHOD_PAAS in config.methods:
        run_train(config, manifest)
    rows = run_eval(config, manifest)
    config.write(os.path.join(config.report_dir, 'experiment.yml'))
    return rows
