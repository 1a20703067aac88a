"""
Core Zero Cell Analyzer Engine
Orchestrates exact moments, variance sweeps, regime tables, simulations and reporting
"""
from special.functions import DomainError, LogValue, ModelParams, ZeroCellError, kappa
from quadrature.integrator import QuadConfig
from engine.exact import MOMENT_CONFIG, calibrated_intensity, calibrated_intensity_log, mean_volume, moment_bounds
from asymptotics.regime import (
    CEILING_NOTE,
    IntensityRule,
    RegimeMode,
    RegimeSpec,
    decay_base,
    parameter_row,
    regime_report,
)
from simulator.monte_carlo import CrossValidation, SimulationSummary, cross_validate, run_simulation
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple
from pathlib import Path
import logging
import math
import json
import pandas as pd
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ('n', 'r', 'gamma', 'mean', 'var', 'var_lower', 'var_upper', 'E_nr', 'quad_err', 'converged')
REGIME_COLUMNS = ('n', 'r', 'gamma', 'mean', 'k2_lower', 'k2_upper', 'var', 'var_lower', 'var_upper',
                  'E_nr', 'quad_err', 'converged', 'decay_base', 'var_ratio_1', 'predicted_ratio_1',
                  'var_ratio_2', 'predicted_ratio_2')
SIMULATION_COLUMNS = ('n', 'r', 'gamma', 'reps', 'seed', 'radius', 'm_points',
                      'mean_est', 'mean_ci_half_width', 'mean_exact', 'mean_tolerance', 'mean_ok',
                      'var_est', 'var_ci_half_width', 'var_exact', 'var_tolerance', 'var_ok',
                      'second_moment_est', 'truncation_bias_bound_mean', 'truncation_bias_bound_second',
                      'geometric_gap', 'passed')
CALIBRATION_COLUMNS = ('n', 'r', 'lambda', 'gamma_hat', 'log_gamma_hat')
BOOLEAN_COLUMNS = ('converged', 'mean_ok', 'var_ok', 'passed')

FIG1_DIMENSIONS = (2, 3, 4)
FIG1_EXPONENTS = (0.5, 1, 1.5, 2, 3, 4, 5, 6, 8, 10, 15, 20, 30, 40, 50, 60, 70, 80, 90, 100)
FIG2_RULES = ('1', '0.5n', 'n', '2n')
FIG2_DIMENSIONS = tuple(range(2, 21))


class NumpyEncoder(json.JSONEncoder):
    """Custom JSON encoder for numpy types, log-space values and parameter models"""
    def default(self, obj):
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, (np.integer, np.floating)):
            return float(obj) if not np.isnan(obj) and not np.isinf(obj) else None
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, LogValue):
            return float(obj) if obj.is_representable() else str(obj)
        elif isinstance(obj, BaseModel):
            return obj.model_dump(mode='json')
        elif isinstance(obj, Enum):
            return obj.value
        elif pd.isna(obj):
            return None
        return super().default(obj)


class SweepMode(str, Enum):
    FIG1 = 'fig1'
    FIG2 = 'fig2'
    CUSTOM = 'custom'


def r_from_rule(rule: str, n: int) -> float:
    """
    Distance exponent for a rule such as '1', 'n', '0.5n' or '2n'

    Args:
        rule: A constant, or a multiple of n written with a trailing 'n'
        n: Dimension

    Returns:
        The exponent r for dimension n
    """
    rule = rule.strip()
    try:
        if rule.endswith('n'):
            factor = rule[:-1]
            return (float(factor) if factor else 1.0) * n
        return float(rule)
    except ValueError:
        raise DomainError(f"Unrecognised r rule '{rule}'") from None


class SweepSpec(BaseModel):
    """Grid of (n, r) pairs and the intensity rule applied along it"""
    model_config = ConfigDict(frozen=True)

    mode: SweepMode = SweepMode.CUSTOM
    grid: List[Tuple[int, float]] = Field(min_length=1)
    intensity_rule: IntensityRule = IntensityRule.CONSTANT
    level: float = Field(1.0, gt=0, allow_inf_nan=False)

    @field_validator('grid')
    @classmethod
    def _valid_pairs(cls, grid: List[Tuple[int, float]]) -> List[Tuple[int, float]]:
        for n, r in grid:
            ModelParams(n=n, r=r, gamma=1.0)
        return grid

    @classmethod
    def fig1(cls, dimensions: Sequence[int] = FIG1_DIMENSIONS,
             exponents: Sequence[float] = FIG1_EXPONENTS,
             intensity_rule: IntensityRule = IntensityRule.CONSTANT, level: float = 1.0) -> 'SweepSpec':
        """Fixed small dimensions with r swept"""
        grid = [(n, float(r)) for n in dimensions for r in exponents]
        return cls(mode=SweepMode.FIG1, grid=grid, intensity_rule=intensity_rule, level=level)

    @classmethod
    def fig2(cls, rule: str = 'n', dimensions: Sequence[int] = FIG2_DIMENSIONS,
             intensity_rule: IntensityRule = IntensityRule.CONSTANT, level: float = 1.0) -> 'SweepSpec':
        """Dimension swept with r following one of the rules 1, 0.5n, n, 2n"""
        grid = [(n, r_from_rule(rule, n)) for n in dimensions]
        return cls(mode=SweepMode.FIG2, grid=grid, intensity_rule=intensity_rule, level=level)

    def params(self, n: int, r: float) -> ModelParams:
        if self.intensity_rule == IntensityRule.CALIBRATED:
            return ModelParams(n=n, r=r, gamma=calibrated_intensity(n, r, self.level))
        return ModelParams(n=n, r=r, gamma=self.level)


def _cell(value, log_value=None) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isinf(value) and log_value is not None and math.isfinite(log_value):
            return f"{'-' if value < 0 else ''}exp({log_value:.17g})"
        return repr(float(value))
    return str(value)


def format_table(df: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    """
    Render the given columns as CSV-ready strings

    Floats use their shortest round-trip form, overflowed cells become exp(<log>)
    when a log_ companion column exists, and flags become true/false.
    """
    out = pd.DataFrame(index=df.index)
    for column in columns:
        values = df[column] if column in df else pd.Series([None] * len(df), index=df.index)
        if column in BOOLEAN_COLUMNS:
            out[column] = [_cell(bool(v) if isinstance(v, (bool, np.bool_)) else False) for v in values]
            continue
        logs = df[f'log_{column}'] if f'log_{column}' in df else [None] * len(df)
        out[column] = [_cell(v, lv) for v, lv in zip(values, logs)]
    return out


class ZeroCellAnalyzer:
    """Main zero-cell analyzer that coordinates all components"""

    def __init__(self, quad_config: Optional[QuadConfig] = None, threads: int = 1):
        """
        Initialize the analyzer

        Args:
            quad_config: Quadrature configuration for variance computations
            threads: Worker threads for sweeps, regime tables and simulations
        """
        logger.debug("Initializing Zero Cell Analyzer with %d threads", threads)
        self.quad_config = quad_config or MOMENT_CONFIG
        self.threads = max(1, int(threads))

        self.results = None
        self.summary = None

    @staticmethod
    def resolve_params(n: int, r: float, gamma: Optional[float] = None,
                       lam: Optional[float] = None) -> ModelParams:
        """
        Build model parameters from either an intensity or a target mean

        Args:
            n: Dimension
            r: Distance exponent
            gamma: Intensity
            lam: Reciprocal target mean; gamma is then calibrated

        Returns:
            Validated ModelParams
        """
        if (gamma is None) == (lam is None):
            raise DomainError("Exactly one of gamma and lambda must be given")
        if lam is not None:
            gamma = calibrated_intensity(n, r, lam)
        return ModelParams(n=n, r=r, gamma=gamma)

    def moments(self, params: ModelParams, k: int = 1) -> Dict:
        """
        Exact mean and bounds for the k-th moment

        Returns:
            Summary dictionary with linear and log forms of every quantity
        """
        mean = mean_volume(params)
        bounds = moment_bounds(params, k)
        summary = {
            'n': params.n, 'r': params.r, 'gamma': params.gamma, 'k': k,
            'mean': mean, 'log_mean': mean.log_abs,
            'lower': bounds.lower, 'log_lower': bounds.lower.log_abs,
            'upper': bounds.upper, 'log_upper': bounds.upper.log_abs,
        }

        print(f"\nMoments for n={params.n}, r={params.r:g}, gamma={params.gamma:.12g}:")
        print(f"  • E[V] = {_describe(mean)}")
        if k > 1:
            print(f"  • E[V^{k}] lower = {_describe(bounds.lower)}")
            print(f"  • E[V^{k}] upper = {_describe(bounds.upper)}")

        self.summary = summary
        return summary

    def variance(self, params: ModelParams) -> Dict:
        """
        Variance, second moment and the variance bounds for one parameter set

        Returns:
            Row dictionary in the sweep layout plus the extra columns
        """
        row = parameter_row(params, self.quad_config)

        print(f"\nVariance for n={params.n}, r={params.r:g}, gamma={params.gamma:.12g}:")
        print(f"  • Var[V]      = {_describe_row(row, 'var')}")
        print(f"  • E[V^2]      = {_describe_row(row, 'second_moment')}")
        print(f"  • E(n,r)      = {row['E_nr']:.12g}")
        print(f"  • D(n,r)      = {_describe_row(row, 'D_nr')}")
        print(f"  • bounds      = [{_describe_row(row, 'var_lower')}, {_describe_row(row, 'var_upper')}]")
        print(f"  • rel. error  = {row['quad_err']:.3g}")
        if row['converged']:
            print("✓ Quadrature converged")
        else:
            print("⚠️  Quadrature did not converge")

        self.results = pd.DataFrame([row])
        self.summary = row
        return row

    def _sweep_row(self, spec: SweepSpec, n: int, r: float) -> Dict:
        row = {'n': n, 'r': r}
        try:
            params = spec.params(n, r)
            row.update(parameter_row(params, self.quad_config))
            if spec.mode == SweepMode.FIG1:
                row['mean_minus_kappa'] = float(mean_volume(params) - kappa(n))
        except (ZeroCellError, ValueError, OverflowError) as e:
            logger.warning("Sweep row n=%d, r=%g failed: %s", n, r, e)
            row.update({'converged': False, 'error': str(e)})
        return row

    def sweep(self, spec: SweepSpec) -> pd.DataFrame:
        """
        Variance sweep over a grid, rows in grid order

        Args:
            spec: Sweep grid and intensity rule

        Returns:
            DataFrame with the sweep columns (plus mean_minus_kappa in fig1
            mode and log_ companions); failed rows are kept and marked
        """
        print(f"\n{'='*60}")
        print(f"Sweeping {len(spec.grid)} grid points ({spec.mode.value} mode)")
        print(f"{'='*60}\n")

        def one(pair: Tuple[int, float]) -> Dict:
            return self._sweep_row(spec, *pair)

        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as executor:
                rows = list(executor.map(one, spec.grid))
        else:
            rows = [one(pair) for pair in spec.grid]

        df = pd.DataFrame(rows)
        failed = int((~df['converged'].fillna(False).astype(bool)).sum())
        if failed:
            print(f"✗ {failed} of {len(df)} rows failed or did not converge")
        else:
            print(f"✓ All {len(df)} rows converged")

        self.results = df
        return df

    def asympt(self, a: float, lam: float, n_max: int, n_min: int = 2) -> pd.DataFrame:
        """
        Regime table for r = a n under the calibrated intensity

        Returns:
            regime_report table including the decay base and the consecutive ratios
        """
        spec = RegimeSpec(mode=RegimeMode.PROPORTIONAL, exponent=a,
                          intensity_rule=IntensityRule.CALIBRATED, level=lam)
        print(f"\n📈 Regime table for r = {a:g} n, lambda = {lam:g}, n = {n_min}..{n_max}")
        print(f"  • decay base = {decay_base(a):.12g}")
        df = regime_report(spec, range(n_min, n_max + 1), self.quad_config, workers=self.threads)
        self.results = df
        self.summary = {
            'a': a, 'lambda': lam, 'n_min': n_min, 'n_max': n_max,
            'decay_base': decay_base(a), 'rows': len(df),
            'failed': int(sum(row_failed(row) for _, row in df.iterrows())),
        }
        return df

    def simulate(self, params: ModelParams, reps: int, points: int, eps_bias: float,
                 seed: int) -> Tuple[SimulationSummary, CrossValidation]:
        """
        Monte Carlo run followed by the comparison with the exact engine

        Returns:
            Tuple of (simulation summary, cross-validation outcome)
        """
        print(f"\n🎲 Simulating n={params.n}, r={params.r:g}, gamma={params.gamma:.12g} "
              f"({reps} reps, seed {seed})...")
        summary = run_simulation(params, reps, points, eps_bias, seed, workers=self.threads)
        check = cross_validate(summary, self.quad_config)

        print(f"  • radius        = {summary.radius:.6g}")
        print(f"  • mean          = {summary.mean_est:.8g} ± {summary.mean_ci_half_width:.3g} "
              f"(exact {check.mean_exact:.8g})")
        print(f"  • variance      = {summary.var_est:.8g} ± {summary.var_ci_half_width:.3g} "
              f"(exact {check.var_exact:.8g})")
        print(f"{'✓' if check.mean_ok else '✗'} Mean within {check.mean_tolerance:.3g}")
        print(f"{'✓' if check.var_ok else '✗'} Variance within {check.var_tolerance:.3g}")

        self.results = summary.to_frame()
        self.summary = simulation_row(summary, check)
        return summary, check

    def calibrate(self, n: int, r: float, lam: float) -> Dict:
        """Calibrated intensity in plain and log form"""
        log_gamma = calibrated_intensity_log(n, r, lam)
        summary = {'n': n, 'r': r, 'lambda': lam, 'gamma_hat': log_gamma, 'log_gamma_hat': log_gamma.log_abs}
        print(f"\nCalibrated intensity for n={n}, r={r:g}, lambda={lam:g}:")
        print(f"  • gamma_hat     = {_describe(log_gamma)}")
        print(f"  • log gamma_hat = {log_gamma.log_abs:.17g}")
        self.summary = summary
        return summary

    def save_table(self, df: pd.DataFrame, path: str, columns: Sequence[str]):
        """
        Write a table as CSV

        Args:
            df: Table to write
            path: Output path (parent directories are created)
            columns: Columns to write, in order
        """
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        format_table(df, columns).to_csv(target, index=False, lineterminator='\n')
        print(f"✓ Table saved to: {target}")

    def save_summary(self, path: str, summary: Optional[Dict] = None):
        """Write the latest summary dictionary as JSON"""
        summary = summary if summary is not None else self.summary
        if summary is None:
            print("⚠️  No summary to save")
            return
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'w') as f:
            json.dump(summary, f, indent=2, cls=NumpyEncoder)
        print(f"✓ Summary saved to: {target}")


def simulation_row(summary: SimulationSummary, check: CrossValidation) -> Dict:
    """Flat comparison row for one simulation"""
    p = summary.params
    return {
        'n': p.n, 'r': p.r, 'gamma': p.gamma, 'reps': summary.reps, 'seed': summary.seed,
        'radius': summary.radius, 'm_points': summary.m_points,
        'mean_est': summary.mean_est, 'mean_ci_half_width': summary.mean_ci_half_width,
        'mean_exact': check.mean_exact, 'mean_tolerance': check.mean_tolerance, 'mean_ok': check.mean_ok,
        'var_est': summary.var_est, 'var_ci_half_width': summary.var_ci_half_width,
        'var_exact': check.var_exact, 'var_tolerance': check.var_tolerance, 'var_ok': check.var_ok,
        'second_moment_est': summary.second_moment_est,
        'truncation_bias_bound_mean': summary.truncation_bias_bound_mean,
        'truncation_bias_bound_second': summary.truncation_bias_bound_second,
        'geometric_gap': summary.geometric_gap, 'passed': check.passed,
    }


def _describe(value: LogValue) -> str:
    if value.is_representable():
        return f"{float(value):.12g} (log {value.log_abs:.12g})"
    return f"{value} ⚠️  overflow, log form only"


def _describe_row(row: Dict, name: str) -> str:
    log_value = row.get(f'log_{name}', math.nan)
    if math.isnan(log_value):
        return str(row.get(name))
    sign = -1 if row[name] < 0 else 1
    return _describe(LogValue.from_log(log_value, sign))


def row_failed(row: pd.Series) -> bool:
    """True for rows that failed or did not converge, excluding bounds-only rows"""
    converged = row.get('converged')
    if isinstance(converged, (bool, np.bool_)) and converged:
        return False
    return row.get('error', '') != CEILING_NOTE


def summary_frame(summary: Dict) -> pd.DataFrame:
    """One-row table from a summary dictionary; LogValues get log_ companions"""
    row = {}
    for key, value in summary.items():
        if isinstance(value, LogValue):
            number, overflowed = value.to_float()
            row[key] = math.copysign(math.inf, number) if overflowed else number
            row[f'log_{key}'] = value.log_abs
        else:
            row[key] = value
    return pd.DataFrame([row])
