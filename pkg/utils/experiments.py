"""
Experiment configuration and the run orchestrator

A run takes one JSON config, simulates every (target, mode) pair, writes one
survival CSV per pair plus a summary table, and evaluates the checks the
config asks for.
"""

import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError, model_validator

import config
from models.systems import (BernoulliShift, FiniteMarkovShift, GaussMap, RenewalShift, RenewalSystem,
                            Rotation, build_system)
from utils import streams
from utils.checks import RETURN_T_MIN, CheckResult, all_passed, at_most, check_divergence, within
from utils.distributions import (build_survival, exponential_survival, integral_relation_residual,
                                 short_return_mass, sup_distance, write_survival_csv)
from utils.errors import ConfigError, InvalidSpec
from utils.recurrence import induced_measure, induced_word_to_full_word
from utils.simulator import MODES, simulate
from utils.targets import CylinderWord, Interval, target_measure

logger = logging.getLogger(__name__)

Mode = Literal['entry', 'return', 'induced-entry', 'induced-return']
CheckName = Literal['induced_gap', 'exponential_gap', 'prop2', 'kac_sigmas', 'divergence']


# Schema

class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid')


class RenewalConfig(_Strict):
    kind: Literal['renewal']
    alpha: float = Field(..., gt=1, description="Decay exponent of P_j = j^-alpha")

    def to_spec(self):
        return RenewalShift(self.alpha)


class FiniteMarkovConfig(_Strict):
    kind: Literal['finite-markov']
    transition_matrix: List[List[float]]
    stationary_vector: List[float]

    def to_spec(self):
        return FiniteMarkovShift(tuple(tuple(row) for row in self.transition_matrix),
                                 tuple(self.stationary_vector))


class BernoulliConfig(_Strict):
    kind: Literal['bernoulli']
    weights: List[float] = Field(..., min_length=1)

    def to_spec(self):
        return BernoulliShift(tuple(self.weights))


class GaussConfig(_Strict):
    kind: Literal['gauss']

    def to_spec(self):
        return GaussMap()


class RotationConfig(_Strict):
    kind: Literal['rotation']
    theta: float = Field(..., gt=0, lt=1)

    def to_spec(self):
        return Rotation(self.theta)


SystemConfig = Annotated[
    Union[RenewalConfig, FiniteMarkovConfig, BernoulliConfig, GaussConfig, RotationConfig],
    Field(discriminator='kind'),
]


class TargetConfig(_Strict):
    word: Optional[List[PositiveInt]] = Field(default=None, min_length=1)
    interval: Optional[Tuple[float, float]] = None
    blocks: Optional[List[PositiveInt]] = Field(default=None, min_length=1)
    label: Optional[str] = None

    @model_validator(mode='after')
    def one_descriptor(self):
        given = [k for k in ('word', 'interval', 'blocks') if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError('give exactly one of word, interval, blocks')
        if self.interval is not None:
            Interval(*self.interval)
        return self

    def to_target(self, system):
        if self.word is not None:
            return CylinderWord(tuple(self.word))
        if self.interval is not None:
            return Interval(*self.interval)
        if not isinstance(system, RenewalSystem):
            raise InvalidSpec('blocks', 'block patterns describe renewal shift words only')
        return CylinderWord(induced_word_to_full_word(self.blocks))


class GridConfig(_Strict):
    t_max: float = Field(config.T_MAX, gt=0)
    dt: float = Field(config.DT, gt=0)


class ExperimentConfig(_Strict):
    name: str = 'experiment'
    system: SystemConfig
    U: Optional[TargetConfig] = None
    targets: List[TargetConfig] = Field(..., min_length=1)
    mode: Union[Mode, List[Mode]]
    n_samples: int = Field(..., ge=100)
    master_seed: int = 0
    grid: GridConfig = Field(default_factory=GridConfig)
    cap: float = Field(config.CENSOR_HORIZON, gt=0, description="Rescaled censoring horizon")
    output: str = config.OUTPUT_DIR
    workers: int = Field(config.WORKERS, ge=1)
    checks: Dict[CheckName, float] = Field(default_factory=dict)

    @property
    def modes(self):
        return [self.mode] if isinstance(self.mode, str) else list(dict.fromkeys(self.mode))

    @model_validator(mode='after')
    def consistent(self):
        if self.cap < self.grid.t_max:
            raise ValueError(f'cap {self.cap} is below grid.t_max {self.grid.t_max}')
        if not self.modes:
            raise ValueError('mode lists no modes')
        if any(m.startswith('induced') for m in self.modes) and self.U is None:
            raise ValueError('induced modes need a return set U')
        if 'divergence' in self.checks and self.system.kind != 'renewal':
            raise ValueError('the divergence check applies to the renewal shift only')
        return self


def _location(loc):
    return '.'.join(str(part) for part in loc) or '<config>'


def parse_config(text, source='<config>'):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f'{source}: line {e.lineno}, column {e.colno}: {e.msg}') from None
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        problems = '; '.join(f"{_location(err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(f'{source}: {problems}') from None


def load_config(path):
    try:
        with open(path, encoding='utf-8') as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f'cannot read {path}: {e.strerror}') from None
    return parse_config(text, str(path))


# Running

@dataclass
class RunReport:
    config: ExperimentConfig
    summary: pd.DataFrame
    comparisons: pd.DataFrame
    checks: List[CheckResult] = field(default_factory=list)
    files: List[str] = field(default_factory=list)

    @property
    def passed(self):
        return all_passed(self.checks)


def _label(target_config, target, index):
    return target_config.label or f'B{index}-{target.label()}'


def _stream_seed(master_seed, target_index, mode):
    # Distinct streams per (target, mode); trial keys use indices >= 0
    return streams.trial_key(master_seed, -1 - (target_index * len(MODES) + MODES.index(mode)))


def _warn_if_growing(measures, labels):
    for (m0, l0), (m1, l1) in zip(zip(measures, labels), zip(measures[1:], labels[1:])):
        if m1 > m0:
            logger.warning("targets should shrink: mu(%s)=%.4g follows mu(%s)=%.4g", l1, m1, l0, m0)


def _compare(label, curves, rows):
    expo = None
    for mode, curve in curves.items():
        if expo is None:
            expo = exponential_survival(curve.t_max, curve.grid[1] - curve.grid[0])
        rows.append({'target': label, 'comparison': f'{mode} vs e^-t',
                     'value': sup_distance(curve, expo)})
    pairs = [('entry', 'induced-entry', None), ('return', 'induced-return', RETURN_T_MIN)]
    for full, induced, t_min in pairs:
        if full in curves and induced in curves:
            rows.append({'target': label, 'comparison': f'{full} vs {induced}',
                         'value': sup_distance(curves[full], curves[induced], t_min=t_min)})
    for entry, ret in (('entry', 'return'), ('induced-entry', 'induced-return')):
        if entry in curves and ret in curves:
            rows.append({'target': label, 'comparison': f'{entry} vs {ret}',
                         'value': sup_distance(curves[entry], curves[ret])})
            rows.append({'target': label, 'comparison': f'integral relation {entry}/{ret}',
                         'value': integral_relation_residual(curves[entry], curves[ret])})


def _config_checks(cfg, system, comparisons, batches, final_label):
    """Checks on the smallest (last) target; limits hold as mu(B) shrinks"""
    results = []
    comparisons = comparisons[comparisons['target'] == final_label]
    for name, tol in cfg.checks.items():
        before = len(results)
        if name == 'induced_gap':
            rows = comparisons[comparisons['comparison'].isin(
                ['entry vs induced-entry', 'return vs induced-return'])]
            results += [at_most(f"induced gap {r.target} {r.comparison}", r.value, tol)
                        for r in rows.itertuples()]
        elif name == 'exponential_gap':
            rows = comparisons[comparisons['comparison'].str.endswith('vs e^-t')]
            results += [at_most(f"exponential gap {r.target} {r.comparison}", r.value, tol)
                        for r in rows.itertuples()]
        elif name == 'prop2':
            rows = comparisons[comparisons['comparison'].str.startswith('integral relation')]
            results += [at_most(f"prop2 {r.target} {r.comparison}", r.value, tol)
                        for r in rows.itertuples()]
        elif name == 'kac_sigmas':
            for (label, mode), batch in batches.items():
                if label == final_label and mode.endswith('return'):
                    results.append(within(f'kac {label} {mode}', batch.mean(), 1.0 / batch.mu,
                                          tol * batch.standard_error(),
                                          f'{tol:g} standard errors, {batch.n_censored} censored'))
        elif name == 'divergence':
            results += check_divergence(alpha=system.alpha, slope_tolerance=tol)
        if len(results) == before:
            logger.warning("check %s found nothing to compare in this run", name)
    return results


def run(cfg, progress=False):
    """Simulate every (target, mode) pair of the config and write the curves"""
    system = build_system(cfg.system.to_spec())
    U = cfg.U.to_target(system) if cfg.U is not None else None
    targets = [tc.to_target(system) for tc in cfg.targets]
    labels = [_label(tc, t, i) for i, (tc, t) in enumerate(zip(cfg.targets, targets))]
    measures = [target_measure(system, t) for t in targets]
    _warn_if_growing(measures, labels)

    os.makedirs(cfg.output, exist_ok=True)
    logger.info("✓ %s on %r, %d targets, modes %s", cfg.name, system, len(targets), ', '.join(cfg.modes))

    summary_rows, comparison_rows, files = [], [], []
    batches = {}
    for index, (B, label, mu) in enumerate(zip(targets, labels, measures)):
        mu_hat = induced_measure(system, U, B) if U is not None else math.nan
        curves = {}
        for mode in cfg.modes:
            seed = _stream_seed(cfg.master_seed, index, mode)
            batch = simulate(system, B, mode, cfg.n_samples, seed, U=U, horizon=cfg.cap,
                             workers=cfg.workers, progress=progress)
            curve = build_survival(batch, cfg.grid.t_max, cfg.grid.dt, label=f'{label}_{mode}')
            path = os.path.join(cfg.output, f'{label}_{mode}.csv')
            files.append(write_survival_csv(curve, path))
            curves[mode] = curve
            batches[(label, mode)] = batch

            kac_target = 1.0 / batch.mu
            summary_rows.append({
                'target': label,
                'mode': mode,
                'mu_B': mu,
                'mu_hat_B': mu_hat,
                'n_samples': batch.n_samples,
                'n_censored': batch.n_censored,
                'mean_steps': batch.mean(),
                'standard_error': batch.standard_error(),
                'kac_target': kac_target if mode.endswith('return') else math.nan,
                'short_return_mass': (short_return_mass(curve, cfg.grid.dt)
                                      if mode.endswith('return') else math.nan),
                'block_ratio': batch.ratio_mean(),
                'native': batch.native,
            })
            logger.info("✓ %s %s: %d trials, %d censored", label, mode, batch.n_samples, batch.n_censored)
        _compare(label, curves, comparison_rows)

    summary = pd.DataFrame(summary_rows)
    comparisons = pd.DataFrame(comparison_rows, columns=['target', 'comparison', 'value'])
    summary_path = os.path.join(cfg.output, 'summary.csv')
    summary.to_csv(summary_path, index=False)
    files.append(summary_path)
    if not comparisons.empty:
        comparisons_path = os.path.join(cfg.output, 'comparisons.csv')
        comparisons.to_csv(comparisons_path, index=False)
        files.append(comparisons_path)

    checks = _config_checks(cfg, system, comparisons, batches, labels[-1])
    return RunReport(cfg, summary, comparisons, checks, files)


def format_run_report(report):
    lines = [f"# {report.config.name}"]
    with pd.option_context('display.width', 160, 'display.max_columns', None):
        lines.append(report.summary.to_string(index=False))
        if not report.comparisons.empty:
            lines.append('')
            lines.append(report.comparisons.to_string(index=False))
    if report.checks:
        lines.append('')
        lines.extend(c.line() for c in report.checks)
    return '\n'.join(lines)
